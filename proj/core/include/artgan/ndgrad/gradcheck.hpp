#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "artgan/ndgrad/graph.hpp"

namespace artgan::nd {

/// One finite-difference check: a builder maps leaf inputs to an output of
/// any shape. The checker projects the output onto a fixed random direction
/// so every case reduces to a scalar.
struct GradCheckCase {
  std::string name;
  /// Ops this case exercises, for the coverage table.
  std::vector<std::string> ops;
  std::vector<Tensor<double>> inputs;
  std::function<Var<double>(Graph<double>&, const std::vector<Var<double>>&)> build;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t projection_seed = 0x5eed;
};

/// Central differences against reverse-mode gradients for every element of
/// every input. Relative error uses max(|a|, |b|, 1e-8) as denominator.
GradCheckResult check_gradients(const GradCheckCase& c, const GradCheckOptions& opts = {});

/// Names of every differentiable op in the engine.
const std::vector<std::string>& registered_ops();

/// One case per op plus three seeded random composite graphs.
std::vector<GradCheckCase> standard_suite(std::uint64_t seed = 2024);

}  // namespace artgan::nd
