#include "artgan/models/networks.hpp"

#include <algorithm>

#include "artgan/errors.hpp"
#include "artgan/models/heads.hpp"

namespace artgan::models {

namespace {

std::string idx(const char* base, std::size_t i) { return std::string(base) + std::to_string(i); }

}  // namespace

template <typename T>
Generator<T>::Generator(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t blocks = cfg_.stages() + (cfg_.iq ? 1 : 0);
  project_ = Linear<T>(cfg_.z_dim + cfg_.num_classes, cfg_.g_base * 16, cfg_.init_std, rng);
  project_bn_ = BatchNorm<T>(cfg_.g_base);
  std::size_t width = cfg_.g_base;
  for (std::size_t b = 0; b < blocks; ++b) {
    const bool last = b + 1 == blocks;
    const std::size_t next = last ? cfg_.channels : std::max<std::size_t>(width / 2, 8);
    convs_.emplace_back(width, next, 3, 1, 1, /*with_bias=*/last, cfg_.init_std, rng);
    if (!last) bns_.emplace_back(next);
    width = next;
  }
}

template <typename T>
Var<T> Generator<T>::forward(Graph<T>& g, Var<T> z, Var<T> onehot, BnMode mode, bool trainable) {
  if (z.shape().size() != 2 || z.shape()[1] != cfg_.z_dim) {
    throw DimensionError("generator: z must be N x " + std::to_string(cfg_.z_dim) + ", got " + nd::to_string(z.shape()));
  }
  if (onehot.shape() != Shape{z.shape()[0], cfg_.num_classes}) {
    throw DimensionError("generator: label must be N x " + std::to_string(cfg_.num_classes) + ", got " +
                         nd::to_string(onehot.shape()));
  }
  const T slope = T(cfg_.leaky_slope);
  const std::size_t n = z.shape()[0];
  auto h = project_(g, nd::concat(z, onehot), trainable);
  h = nd::reshape(h, {n, cfg_.g_base, 4, 4});
  h = nd::leaky_relu(project_bn_(g, h, mode, trainable, true), slope);
  for (std::size_t b = 0; b < convs_.size(); ++b) {
    h = convs_[b](g, nd::upsample_nn2x(h), trainable);
    if (b < bns_.size()) {
      h = nd::leaky_relu(bns_[b](g, h, mode, trainable, true), slope);
    } else {
      h = nd::tanh(h);
    }
  }
  return h;
}

template <typename T>
TensorList<T> Generator<T>::parameters() {
  TensorList<T> out;
  project_.collect("project", out);
  project_bn_.collect("project_bn", out);
  for (std::size_t b = 0; b < convs_.size(); ++b) {
    convs_[b].collect(idx("block", b) + ".conv", out);
    if (b < bns_.size()) bns_[b].collect(idx("block", b) + ".bn", out);
  }
  return out;
}

template <typename T>
TensorList<T> Generator<T>::buffers() {
  TensorList<T> out;
  project_bn_.collect_buffers("project_bn", out);
  for (std::size_t b = 0; b < bns_.size(); ++b) bns_[b].collect_buffers(idx("block", b) + ".bn", out);
  return out;
}

template <typename T>
Discriminator<T>::Discriminator(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t stages = cfg_.stages();
  std::vector<std::size_t> widths{cfg_.channels};
  for (std::size_t s = 0; s < stages; ++s) widths.push_back(cfg_.d_base << s);
  for (std::size_t s = 0; s < stages; ++s) {
    enc_convs_.emplace_back(widths[s], widths[s + 1], 4, 2, 1, /*with_bias=*/false, cfg_.init_std, rng);
    enc_bns_.emplace_back(widths[s + 1]);
  }
  head_ = Linear<T>(cfg_.hidden_width(), cfg_.num_classes, cfg_.init_std, rng);
  for (std::size_t s = stages; s > 0; --s) {
    dec_convs_.emplace_back(widths[s], widths[s - 1], 3, 1, 1, /*with_bias=*/true, cfg_.init_std, rng);
  }
}

template <typename T>
DiscriminatorOutput<T> Discriminator<T>::forward(Graph<T>& g, Var<T> x, BnMode mode, bool trainable, bool decode,
                                                 bool update_running) {
  const Shape expect{x.shape().empty() ? 0 : x.shape()[0], cfg_.channels, cfg_.train_size, cfg_.train_size};
  if (x.shape() != expect) {
    throw DimensionError("discriminator: input must be N x " + std::to_string(cfg_.channels) + " x " +
                         std::to_string(cfg_.train_size) + " x " + std::to_string(cfg_.train_size) + ", got " +
                         nd::to_string(x.shape()));
  }
  const T slope = T(cfg_.leaky_slope);
  const std::size_t n = x.shape()[0];
  auto h = x;
  for (std::size_t s = 0; s < enc_convs_.size(); ++s) {
    h = enc_convs_[s](g, h, trainable);
    h = nd::leaky_relu(enc_bns_[s](g, h, mode, trainable, update_running), slope);
  }
  DiscriminatorOutput<T> out;
  out.hidden = nd::reshape(h, {n, cfg_.hidden_width()});
  out.logits = head_(g, out.hidden, trainable);

  const std::size_t K = cfg_.num_classes;
  out.class_probs = Tensor<T>(Shape{n, K});
  out.adv_prob = Tensor<T>(Shape{n});
  const auto& lv = out.logits.value();
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const T> row(lv.data().data() + i * K, K);
    auto p = class_probs<T>(row);
    std::copy(p.begin(), p.end(), out.class_probs.data().begin() + i * K);
    out.adv_prob[i] = adversarial_prob<T>(row);
  }

  if (decode) {
    auto r = h;
    for (std::size_t s = 0; s < dec_convs_.size(); ++s) {
      r = dec_convs_[s](g, nd::upsample_nn2x(r), trainable);
      r = s + 1 < dec_convs_.size() ? nd::leaky_relu(r, slope) : nd::tanh(r);
    }
    out.recon = r;
  }
  return out;
}

template <typename T>
TensorList<T> Discriminator<T>::encoder_parameters() {
  TensorList<T> out;
  for (std::size_t s = 0; s < enc_convs_.size(); ++s) {
    enc_convs_[s].collect(idx("enc", s) + ".conv", out);
    enc_bns_[s].collect(idx("enc", s) + ".bn", out);
  }
  return out;
}

template <typename T>
TensorList<T> Discriminator<T>::head_parameters() {
  TensorList<T> out;
  head_.collect("head", out);
  return out;
}

template <typename T>
TensorList<T> Discriminator<T>::decoder_parameters() {
  TensorList<T> out;
  for (std::size_t s = 0; s < dec_convs_.size(); ++s) dec_convs_[s].collect(idx("dec", s) + ".conv", out);
  return out;
}

template <typename T>
TensorList<T> Discriminator<T>::parameters() {
  auto out = encoder_parameters();
  for (auto& p : head_parameters()) out.push_back(p);
  for (auto& p : decoder_parameters()) out.push_back(p);
  return out;
}

template <typename T>
TensorList<T> Discriminator<T>::buffers() {
  TensorList<T> out;
  for (std::size_t s = 0; s < enc_bns_.size(); ++s) enc_bns_[s].collect_buffers(idx("enc", s) + ".bn", out);
  return out;
}

template <typename T>
Denoiser<T>::Denoiser(std::size_t width, std::size_t hidden, double init_std, double slope, Rng& rng)
    : width_(width),
      slope_(slope),
      in_(width, hidden, init_std, rng),
      out_(hidden, width, init_std, rng, /*zero_init=*/true) {}

template <typename T>
Var<T> Denoiser<T>::forward(Graph<T>& g, Var<T> phi, bool trainable) {
  if (phi.shape().size() != 2 || phi.shape()[1] != width_) {
    throw DimensionError("denoiser: features must be N x " + std::to_string(width_) + ", got " +
                         nd::to_string(phi.shape()));
  }
  return out_(g, nd::leaky_relu(in_(g, phi, trainable), T(slope_)), trainable);
}

template <typename T>
TensorList<T> Denoiser<T>::parameters() {
  TensorList<T> out;
  in_.collect("in", out);
  out_.collect("out", out);
  return out;
}

template <typename T>
Tensor<T> one_hot(const std::vector<int>& labels, std::size_t num_classes) {
  Tensor<T> t(Shape{labels.size(), num_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || std::size_t(labels[i]) >= num_classes) {
      throw ConfigError("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    t[i * num_classes + std::size_t(labels[i])] = T(1);
  }
  return t;
}

template <typename T>
Tensor<T> generate(Generator<T>& G, const Tensor<T>& z, const std::vector<int>& labels, bool full_res) {
  const auto& cfg = G.config();
  if (z.rank() != 2 || z.shape()[0] != labels.size())
    throw DimensionError("generate: z " + nd::to_string(z.shape()) + " does not match " +
                         std::to_string(labels.size()) + " labels");
  if (full_res && !cfg.iq) throw ConfigError("full-resolution output requires a model trained with IQ");
  const std::size_t n = labels.size(), zd = z.shape()[1];
  const std::size_t s = full_res ? cfg.generator_output_size() : cfg.train_size;
  Tensor<T> out(Shape{n, cfg.channels, s, s});
  const std::size_t per = cfg.channels * s * s;
  for (std::size_t i = 0; i < n; ++i) {
    Graph<T> g;
    Tensor<T> zi(Shape{1, zd});
    std::copy_n(z.data().begin() + std::ptrdiff_t(i * zd), zd, zi.data().begin());
    auto x = G.forward(g, g.constant(std::move(zi)), g.constant(one_hot<T>({labels[i]}, cfg.num_classes)),
                       BnMode::Eval, false);
    if (cfg.iq && !full_res) x = nd::avgpool_overlap(x);
    std::copy_n(x.value().data().begin(), per, out.data().begin() + std::ptrdiff_t(i * per));
  }
  return out;
}

template <typename T>
Tensor<T> latent_line(const Tensor<T>& z_a, const Tensor<T>& z_b, std::size_t steps) {
  if (steps < 2) throw ConfigError("interpolation needs at least 2 steps");
  if (z_a.shape() != z_b.shape() || z_a.rank() != 2 || z_a.shape()[0] != 1)
    throw DimensionError("interpolation endpoints must both be 1 x z_dim");
  const std::size_t d = z_a.size();
  Tensor<T> out(Shape{steps, d});
  for (std::size_t i = 0; i < steps; ++i) {
    const T t = T(double(i) / double(steps - 1));
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] = (T(1) - t) * z_a[k] + t * z_b[k];
  }
  return out;
}

template Tensor<float> latent_line(const Tensor<float>&, const Tensor<float>&, std::size_t);
template Tensor<double> latent_line(const Tensor<double>&, const Tensor<double>&, std::size_t);
template Tensor<float> generate(Generator<float>&, const Tensor<float>&, const std::vector<int>&, bool);
template Tensor<double> generate(Generator<double>&, const Tensor<double>&, const std::vector<int>&, bool);
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template class Denoiser<float>;
template class Denoiser<double>;
template Tensor<float> one_hot<float>(const std::vector<int>&, std::size_t);
template Tensor<double> one_hot<double>(const std::vector<int>&, std::size_t);

}  // namespace artgan::models
