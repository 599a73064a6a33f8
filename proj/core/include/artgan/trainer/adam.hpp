#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artgan/models/layers.hpp"

namespace artgan::trainer {

using models::TensorList;
using nd::Tensor;

struct AdamHyper {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment buffers aligned with one TensorList.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const TensorList<T>& params);
};

/// One bias-corrected Adam update from each tensor's grad(); a tensor that
/// never received gradient is treated as having a zero gradient. Throws
/// NumericError naming the tensor if any gradient is non-finite, before any
/// parameter is modified.
template <typename T>
void adam_step(const TensorList<T>& params, AdamState<T>& state, double lr, const AdamHyper& hyper);

}  // namespace artgan::trainer
