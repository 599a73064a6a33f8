#include "artgan/models/heads.hpp"

#include <algorithm>
#include <cmath>

#include "artgan/errors.hpp"
#include "artgan/ndgrad/tensor.hpp"

namespace artgan::models {

template <typename T>
T log_sum_exp(std::span<const T> logits) {
  if (logits.empty()) throw DimensionError("log_sum_exp: no logits");
  nd::check_finite(logits, "logits");
  const T m = *std::max_element(logits.begin(), logits.end());
  T acc = T(0);
  for (T l : logits) acc += std::exp(l - m);
  return m + std::log(acc);
}

template <typename T>
std::vector<T> class_probs(std::span<const T> logits) {
  const T lse = log_sum_exp(logits);
  std::vector<T> p(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) p[k] = std::exp(logits[k] - lse);
  return p;
}

template <typename T>
T adversarial_prob(std::span<const T> logits) {
  const T a = log_sum_exp(logits);
  if (a >= T(0)) return T(1) / (T(1) + std::exp(-a));
  const T e = std::exp(a);
  return e / (T(1) + e);
}

template float log_sum_exp<float>(std::span<const float>);
template double log_sum_exp<double>(std::span<const double>);
template std::vector<float> class_probs<float>(std::span<const float>);
template std::vector<double> class_probs<double>(std::span<const double>);
template float adversarial_prob<float>(std::span<const float>);
template double adversarial_prob<double>(std::span<const double>);

}  // namespace artgan::models
