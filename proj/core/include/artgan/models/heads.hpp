#pragma once

#include <span>
#include <vector>

namespace artgan::models {

/// log(sum_i exp(l_i)), max-shifted.
template <typename T>
T log_sum_exp(std::span<const T> logits);

/// p(c_k|x) = exp(l_k) / sum_i exp(l_i).
template <typename T>
std::vector<T> class_probs(std::span<const T> logits);

/// p(y|x) = Z / (Z + 1) with Z = sum_i exp(l_i), evaluated as
/// sigmoid(logsumexp(l)) so large logits do not overflow.
template <typename T>
T adversarial_prob(std::span<const T> logits);

}  // namespace artgan::models
