#pragma once

#include <vector>

#include "artgan/models/config.hpp"
#include "artgan/models/layers.hpp"

namespace artgan::models {

using nd::BnMode;

/// Conditional generator G(z, c): the latent code and one-hot label are
/// concatenated, projected to a 4x4 seed, then grown by blocks of
/// {nearest 2x upsample -> 3x3 conv -> batch norm -> leaky ReLU}. The last
/// block's conv maps to image channels followed by tanh. With IQ enabled
/// one extra block produces 2x the training resolution.
template <typename T>
class Generator {
 public:
  Generator() = default;
  Generator(const ModelConfig& cfg, Rng& rng);

  /// z: N x z_dim, onehot: N x K -> N x C x S x S, S = generator_output_size().
  Var<T> forward(Graph<T>& g, Var<T> z, Var<T> onehot, BnMode mode, bool trainable = true);

  const ModelConfig& config() const { return cfg_; }
  TensorList<T> parameters();
  TensorList<T> buffers();

 private:
  ModelConfig cfg_;
  Linear<T> project_;
  BatchNorm<T> project_bn_;
  std::vector<Conv2d<T>> convs_;
  std::vector<BatchNorm<T>> bns_;  // one per block except the last
};

/// Everything one discriminator pass yields.
template <typename T>
struct DiscriminatorOutput {
  Var<T> logits;            ///< N x K, the l_k
  Tensor<T> class_probs;    ///< N x K, p(c|x)
  Tensor<T> adv_prob;       ///< N, p(y|x)
  Var<T> recon;             ///< D_AE(x); invalid when decoding was skipped
  Var<T> hidden;            ///< N x n_h, Phi(x)
};

/// Categorical autoencoder discriminator. One encoder of
/// {stride-2 4x4 conv -> batch norm -> leaky ReLU} stages feeds both the
/// K-logit classifier head and the decoder; Phi(x) is the flattened encoder
/// output.
template <typename T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const ModelConfig& cfg, Rng& rng);

  /// x must be N x C x train_size x train_size.
  DiscriminatorOutput<T> forward(Graph<T>& g, Var<T> x, BnMode mode, bool trainable = true, bool decode = true,
                                 bool update_running = true);

  const ModelConfig& config() const { return cfg_; }
  std::size_t hidden_width() const { return cfg_.hidden_width(); }
  TensorList<T> parameters();
  TensorList<T> encoder_parameters();
  TensorList<T> head_parameters();
  TensorList<T> decoder_parameters();
  TensorList<T> buffers();

 private:
  ModelConfig cfg_;
  std::vector<Conv2d<T>> enc_convs_;
  std::vector<BatchNorm<T>> enc_bns_;
  Linear<T> head_;
  std::vector<Conv2d<T>> dec_convs_;
};

/// Fully connected autoencoder r(.) over discriminator features. The output
/// layer starts at zero, so r is constant at initialization.
template <typename T>
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(std::size_t width, std::size_t hidden, double init_std, double slope, Rng& rng);

  Var<T> forward(Graph<T>& g, Var<T> phi, bool trainable = true);

  std::size_t width() const { return width_; }
  TensorList<T> parameters();

 private:
  std::size_t width_ = 0;
  double slope_ = 0.2;
  Linear<T> in_;
  Linear<T> out_;
};

/// Row-wise one-hot matrix for integer labels.
template <typename T>
Tensor<T> one_hot(const std::vector<int>& labels, std::size_t num_classes);

/// Eval-mode generation one sample at a time, so an image depends only on
/// its own (z, label) and never on batch composition. IQ outputs are pooled
/// to train_size unless `full_res`.
template <typename T>
Tensor<T> generate(Generator<T>& G, const Tensor<T>& z, const std::vector<int>& labels, bool full_res = false);

/// Rows z_t = (1 - t) z_a + t z_b for t = i / (steps - 1); the first and
/// last rows equal z_a and z_b exactly.
template <typename T>
Tensor<T> latent_line(const Tensor<T>& z_a, const Tensor<T>& z_b, std::size_t steps);

extern template class Generator<float>;
extern template class Generator<double>;
extern template class Discriminator<float>;
extern template class Discriminator<double>;
extern template class Denoiser<float>;
extern template class Denoiser<double>;

}  // namespace artgan::models
