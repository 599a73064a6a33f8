#pragma once

#include "artgan/ndgrad/graph.hpp"
#include "artgan/ndgrad/tensor.hpp"

namespace artgan::nd {

enum class BnMode { Train, Eval };

/// Running statistics of one batch-norm layer.
template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : running_mean(Shape{channels}, T(0)), running_var(Shape{channels}, T(1)) {}
};

/// Output extent of a strided window; throws ConfigError when the window
/// does not tile the padded input exactly.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

// Image ops. All inputs are N,C,H,W.

/// Cross-correlation. `b` may be a default-constructed Var for no bias.
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, std::size_t stride, std::size_t pad);

/// Replicates each pixel into a 2x2 block.
template <typename T>
Var<T> upsample_nn2x(Var<T> x);

/// 3x3 window, stride 2, pad 1, averaged over in-bounds taps only, so
/// corners divide by 4, edges by 6 and the interior by 9. H and W must be even.
template <typename T>
Var<T> avgpool_overlap(Var<T> x);

/// Per-channel normalization over every axis except 1. Accepts rank 2
/// (N,F) and rank 4 (N,C,H,W). Train mode normalizes with batch statistics
/// and, if `state` is given and `update_running` is set, folds them into the
/// running averages; Eval mode uses the running averages.
template <typename T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormState<T>* state, BnMode mode,
                 bool update_running = true);

// Elementwise and affine ops.

template <typename T>
Var<T> leaky_relu(Var<T> x, T alpha = T(0.2));
template <typename T>
Var<T> relu(Var<T> x);
template <typename T>
Var<T> tanh(Var<T> x);
template <typename T>
Var<T> softplus(Var<T> x);
template <typename T>
Var<T> square(Var<T> x);
/// Gradient at 0 is taken as 0.
template <typename T>
Var<T> sqrt(Var<T> x);

/// x: N x In, w: Out x In, b: Out (or invalid Var for none).
template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> scale(Var<T> a, T s);
template <typename T>
Var<T> add_scalar(Var<T> a, T s);

/// Concatenation along axis 1; every other extent must match.
template <typename T>
Var<T> concat(Var<T> a, Var<T> b);
template <typename T>
Var<T> reshape(Var<T> x, Shape shape);

// Reductions. Scalars have shape {1}.

template <typename T>
Var<T> sum(Var<T> x);
template <typename T>
Var<T> mean(Var<T> x);
/// N x ... -> N
template <typename T>
Var<T> sum_rows(Var<T> x);
template <typename T>
Var<T> mean_rows(Var<T> x);
/// N x K -> N, max-shifted.
template <typename T>
Var<T> logsumexp_rows(Var<T> x);

}  // namespace artgan::nd
