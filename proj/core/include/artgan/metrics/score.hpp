#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace artgan::metrics {

/// -sum p_i ln p_i with 0 ln 0 = 0.
double entropy(std::span<const double> p);

struct SplitStats {
  double mean = 0.0;
  double std = 0.0;  ///< Population standard deviation over splits.
};

/// Split Inception-style score of a posterior matrix.
///
/// objectness = exp(mean_x H(p(y|x))), class_diversity = exp(H(mean_x p(y|x)))
/// and score = class_diversity / objectness, which equals
/// exp(E_x KL(p(y|x) || p(y))). The top-level fields are computed over all
/// samples, so score == class_diversity / objectness holds exactly; the
/// *_splits fields aggregate the same quantities over `splits` equal
/// contiguous chunks.
struct ScoreReport {
  double objectness = 0.0;
  double class_diversity = 0.0;
  double score = 0.0;
  std::size_t n_samples = 0;
  std::size_t num_classes = 0;
  std::size_t splits = 0;
  SplitStats objectness_splits;
  SplitStats diversity_splits;
  SplitStats score_splits;
};

/// `posteriors` is N x K row-major; every row must sum to 1 within 1e-6.
/// Throws DimensionError on a non-simplex row and ConfigError when
/// splits is 0 or exceeds N.
ScoreReport split_score(std::span<const double> posteriors, std::size_t num_classes, std::size_t splits = 10);

void to_json(nlohmann::json& j, const ScoreReport& r);

/// Fraction of rows whose argmax equals the label.
double conditional_fidelity(std::span<const double> posteriors, std::size_t num_classes, const std::vector<int>& labels);

}  // namespace artgan::metrics
