#pragma once

#include <string>
#include <utility>
#include <vector>

#include "artgan/ndgrad/ops.hpp"
#include "artgan/rng.hpp"

namespace artgan::models {

using nd::Graph;
using nd::Shape;
using nd::Tensor;
using nd::Var;

/// Named references into a network's tensors, in a stable order.
template <typename T>
using TensorList = std::vector<std::pair<std::string, Tensor<T>*>>;

/// Trainable leaves get gradient; frozen ones enter the tape as constants.
template <typename T>
Var<T> bind(Graph<T>& g, Tensor<T>& t, bool trainable) {
  return trainable ? g.parameter(t) : g.constant(t);
}

template <typename T>
Tensor<T> gaussian(Shape shape, double std, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(std * rng.normal());
  return t;
}

template <typename T>
struct Linear {
  Tensor<T> weight;  // out x in
  Tensor<T> bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out, double init_std, Rng& rng, bool zero_init = false)
      : weight(zero_init ? Tensor<T>(Shape{out, in}) : gaussian<T>(Shape{out, in}, init_std, rng)),
        bias(Shape{out}) {}

  Var<T> operator()(Graph<T>& g, Var<T> x, bool trainable) {
    return nd::linear(x, bind(g, weight, trainable), bind(g, bias, trainable));
  }

  void collect(const std::string& prefix, TensorList<T>& out) {
    out.emplace_back(prefix + ".weight", &weight);
    out.emplace_back(prefix + ".bias", &bias);
  }
};

template <typename T>
struct Conv2d {
  Tensor<T> weight;  // cout x cin x k x k
  Tensor<T> bias;    // empty when the conv feeds a batch norm
  std::size_t stride = 1;
  std::size_t pad = 0;

  Conv2d() = default;
  Conv2d(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride_, std::size_t pad_, bool with_bias,
         double init_std, Rng& rng)
      : weight(gaussian<T>(Shape{cout, cin, k, k}, init_std, rng)),
        bias(with_bias ? Tensor<T>(Shape{cout}) : Tensor<T>()),
        stride(stride_),
        pad(pad_) {}

  Var<T> operator()(Graph<T>& g, Var<T> x, bool trainable) {
    Var<T> b = bias.empty() ? Var<T>() : bind(g, bias, trainable);
    return nd::conv2d(x, bind(g, weight, trainable), b, stride, pad);
  }

  void collect(const std::string& prefix, TensorList<T>& out) {
    out.emplace_back(prefix + ".weight", &weight);
    if (!bias.empty()) out.emplace_back(prefix + ".bias", &bias);
  }
};

template <typename T>
struct BatchNorm {
  Tensor<T> gamma;
  Tensor<T> beta;
  nd::BatchNormState<T> state;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels) : gamma(Shape{channels}, T(1)), beta(Shape{channels}), state(channels) {}

  Var<T> operator()(Graph<T>& g, Var<T> x, nd::BnMode mode, bool trainable, bool update_running) {
    return nd::batchnorm(x, bind(g, gamma, trainable), bind(g, beta, trainable), &state, mode, update_running);
  }

  void collect(const std::string& prefix, TensorList<T>& out) {
    out.emplace_back(prefix + ".gamma", &gamma);
    out.emplace_back(prefix + ".beta", &beta);
  }
  void collect_buffers(const std::string& prefix, TensorList<T>& out) {
    out.emplace_back(prefix + ".running_mean", &state.running_mean);
    out.emplace_back(prefix + ".running_var", &state.running_var);
  }
};

}  // namespace artgan::models
