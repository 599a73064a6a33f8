#include "artgan/trainer/adam.hpp"

#include <cmath>

#include "artgan/errors.hpp"

namespace artgan::trainer {

template <typename T>
AdamState<T>::AdamState(const TensorList<T>& params) {
  for (const auto& [name, p] : params) {
    m.emplace_back(p->shape(), T(0));
    v.emplace_back(p->shape(), T(0));
  }
}

template <typename T>
void adam_step(const TensorList<T>& params, AdamState<T>& state, double lr, const AdamHyper& hyper) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw DimensionError("adam_step: state tracks " + std::to_string(state.m.size()) + " tensors, got " +
                         std::to_string(params.size()));
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    if (state.m[i].shape() != p->shape())
      throw DimensionError("adam_step: moment shape mismatch for " + name);
    if (p->has_grad()) {
      const std::string what = "gradient of " + name;
      nd::check_finite<T>(std::span<const T>(p->grad()), what.c_str());
    }
  }

  const std::uint64_t t = ++state.t;
  const double c1 = 1.0 - std::pow(hyper.beta1, double(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, double(t));
  const T b1 = T(hyper.beta1), b2 = T(hyper.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i].second;
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    auto w = p.data();
    const bool has = p.has_grad();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const T g = has ? p.grad()[k] : T(0);
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      const double mh = double(m[k]) / c1;
      const double vh = double(v[k]) / c2;
      w[k] = T(double(w[k]) - lr * mh / (std::sqrt(vh) + hyper.eps));
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(const TensorList<float>&, AdamState<float>&, double, const AdamHyper&);
template void adam_step(const TensorList<double>&, AdamState<double>&, double, const AdamHyper&);

}  // namespace artgan::trainer
