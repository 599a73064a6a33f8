#include "artgan/losses/losses.hpp"

#include "artgan/errors.hpp"

namespace artgan::losses {

using namespace artgan::nd;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::EB: return "eb";
    case Variant::AE: return "ae";
    case Variant::DFM: return "dfm";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "baseline") return Variant::Baseline;
  if (s == "eb") return Variant::EB;
  if (s == "ae") return Variant::AE;
  if (s == "dfm") return Variant::DFM;
  throw ConfigError("unknown variant '" + s + "' (expected baseline|eb|ae|dfm)");
}

std::string to_string(ReconNorm n) { return n == ReconNorm::L2 ? "l2" : "per_pixel_mse"; }

ReconNorm parse_recon_norm(const std::string& s) {
  if (s == "per_pixel_mse") return ReconNorm::PerPixelMse;
  if (s == "l2") return ReconNorm::L2;
  throw ConfigError("unknown recon_norm '" + s + "' (expected per_pixel_mse|l2)");
}

void VariantConfig::validate() const {
  if (variant == Variant::EB && !(margin > 0.0)) throw ConfigError("variant.margin must be > 0 for the EB variant");
  if (margin < 0.0) throw ConfigError("variant.margin must be nonnegative");
  if (lambda_adv < 0.0) throw ConfigError("variant.lambda_adv must be nonnegative");
  if (corruption_sigma < 0.0) throw ConfigError("variant.corruption_sigma must be nonnegative");
}

void to_json(nlohmann::json& j, const VariantConfig& c) {
  j = nlohmann::json{{"variant", to_string(c.variant)},
                     {"iq", c.iq},
                     {"margin", c.margin},
                     {"lambda_denoise", c.lambda_denoise},
                     {"lambda_adv", c.lambda_adv},
                     {"recon_norm", to_string(c.recon_norm)},
                     {"denoiser_corruption", c.denoiser_corruption},
                     {"corruption_sigma", c.corruption_sigma}};
}

void from_json(const nlohmann::json& j, VariantConfig& c) {
  c.variant = parse_variant(j.at("variant").get<std::string>());
  j.at("iq").get_to(c.iq);
  j.at("margin").get_to(c.margin);
  j.at("lambda_denoise").get_to(c.lambda_denoise);
  j.at("lambda_adv").get_to(c.lambda_adv);
  c.recon_norm = parse_recon_norm(j.at("recon_norm").get<std::string>());
  j.at("denoiser_corruption").get_to(c.denoiser_corruption);
  j.at("corruption_sigma").get_to(c.corruption_sigma);
}

namespace {

template <typename T>
void require_labels(const DiscriminatorOutput<T>& out, const Tensor<T>& onehot, const char* who) {
  if (onehot.shape() != out.logits.shape()) {
    throw DimensionError(std::string(who) + ": labels " + nd::to_string(onehot.shape()) + " do not match logits " +
                         nd::to_string(out.logits.shape()));
  }
}

/// -log p(c|x) - log p(y|x) per sample.
template <typename T>
Var<T> real_class_nll(const DiscriminatorOutput<T>& out, const Tensor<T>& onehot) {
  auto& g = out.logits.graph();
  auto lse = logsumexp_rows(out.logits);
  auto picked = sum_rows(mul(out.logits, g.constant(onehot)));
  return add(sub(lse, picked), softplus(scale(lse, T(-1))));
}

}  // namespace

template <typename T>
Var<T> d_cat(const DiscriminatorOutput<T>& real, const Tensor<T>& real_onehot, const DiscriminatorOutput<T>& fake) {
  require_labels(real, real_onehot, "d_cat");
  auto real_term = mean(real_class_nll(real, real_onehot));
  // -log(1 - p(y|G)) = log(Z + 1) = softplus(logsumexp(l)).
  auto fake_term = mean(softplus(logsumexp_rows(fake.logits)));
  return add(real_term, fake_term);
}

template <typename T>
Var<T> g_cat(const DiscriminatorOutput<T>& fake, const Tensor<T>& fake_onehot) {
  require_labels(fake, fake_onehot, "g_cat");
  return mean(real_class_nll(fake, fake_onehot));
}

template <typename T>
Var<T> recon_per_sample(Var<T> x, Var<T> recon, ReconNorm norm) {
  if (!recon.valid()) throw ConfigError("reconstruction requested from a pass without the decoder");
  if (x.shape() != recon.shape()) {
    throw DimensionError("recon: shapes " + nd::to_string(x.shape()) + " vs " + nd::to_string(recon.shape()));
  }
  auto sq = square(sub(recon, x));
  return norm == ReconNorm::PerPixelMse ? mean_rows(sq) : nd::sqrt(sum_rows(sq));
}

template <typename T>
Var<T> recon_loss(Var<T> x, Var<T> recon, ReconNorm norm) {
  return mean(recon_per_sample(x, recon, norm));
}

template <typename T>
Var<T> d_eb(Var<T> real_x, Var<T> real_recon, Var<T> fake_x, Var<T> fake_recon, double margin, ReconNorm norm) {
  if (!(margin > 0.0)) throw ConfigError("d_eb: margin must be positive");
  auto hinge = relu(add_scalar(scale(recon_per_sample(fake_x, fake_recon, norm), T(-1)), T(margin)));
  return add(recon_loss(real_x, real_recon, norm), mean(hinge));
}

template <typename T>
Var<T> g_eb(Var<T> fake_x, Var<T> fake_recon, ReconNorm norm) {
  return recon_loss(fake_x, fake_recon, norm);
}

template <typename T>
Var<T> d_ebc(const DiscriminatorOutput<T>& real, Var<T> real_x, const Tensor<T>& real_onehot,
             const DiscriminatorOutput<T>& fake, Var<T> fake_x, double margin, ReconNorm norm) {
  return add(d_cat(real, real_onehot, fake), d_eb(real_x, real.recon, fake_x, fake.recon, margin, norm));
}

template <typename T>
Var<T> g_ae(const DiscriminatorOutput<T>& fake, Var<T> fake_x, const Tensor<T>& fake_onehot, ReconNorm norm) {
  return add(g_cat(fake, fake_onehot), g_eb(fake_x, fake.recon, norm));
}

template <typename T>
Var<T> d_ae(const DiscriminatorOutput<T>& real, Var<T> real_x, const Tensor<T>& real_onehot,
            const DiscriminatorOutput<T>& fake, ReconNorm norm) {
  return add(d_cat(real, real_onehot, fake), recon_loss(real_x, real.recon, norm));
}

template <typename T>
Var<T> r_loss(Graph<T>& g, models::Denoiser<T>& r, const Tensor<T>& phi_real, ReconNorm norm, Rng* corruption_rng,
              double sigma) {
  auto target = g.constant(phi_real);
  auto input = target;
  if (corruption_rng) {
    Tensor<T> noisy = phi_real;
    for (auto& v : noisy.data()) v += T(sigma * corruption_rng->normal());
    input = g.constant(std::move(noisy));
  }
  return recon_loss(target, r.forward(g, input, /*trainable=*/true), norm);
}

template <typename T>
Var<T> g_dfmc(const DiscriminatorOutput<T>& fake, const Tensor<T>& fake_onehot, models::Denoiser<T>& r,
              double lambda_denoise, ReconNorm norm) {
  auto& g = fake.hidden.graph();
  auto feature = recon_loss(fake.hidden, r.forward(g, fake.hidden, /*trainable=*/false), norm);
  return add(scale(feature, T(lambda_denoise)), g_cat(fake, fake_onehot));
}

template <typename T>
Var<T> g_dfm(const DiscriminatorOutput<T>& fake, models::Denoiser<T>& r, double lambda_denoise, double lambda_adv,
             ReconNorm norm) {
  auto& g = fake.hidden.graph();
  auto feature = recon_loss(fake.hidden, r.forward(g, fake.hidden, /*trainable=*/false), norm);
  auto adv = mean(softplus(scale(logsumexp_rows(fake.logits), T(-1))));
  return add(scale(feature, T(lambda_denoise)), scale(adv, T(lambda_adv)));
}

template <typename T>
GanLoss<T> gan_unconditional(Var<T> real_logit, Var<T> fake_logit, bool saturating) {
  GanLoss<T> out;
  // -log sigmoid(a) = softplus(-a); -log(1 - sigmoid(a)) = softplus(a).
  out.d = add(mean(softplus(scale(real_logit, T(-1)))), mean(softplus(fake_logit)));
  out.g = saturating ? scale(mean(softplus(fake_logit)), T(-1)) : mean(softplus(scale(fake_logit, T(-1))));
  return out;
}

#define ARTGAN_INSTANTIATE_LOSSES(T)                                                                             \
  template Var<T> d_cat(const DiscriminatorOutput<T>&, const Tensor<T>&, const DiscriminatorOutput<T>&);        \
  template Var<T> g_cat(const DiscriminatorOutput<T>&, const Tensor<T>&);                                       \
  template Var<T> recon_per_sample(Var<T>, Var<T>, ReconNorm);                                                  \
  template Var<T> recon_loss(Var<T>, Var<T>, ReconNorm);                                                        \
  template Var<T> d_eb(Var<T>, Var<T>, Var<T>, Var<T>, double, ReconNorm);                                      \
  template Var<T> g_eb(Var<T>, Var<T>, ReconNorm);                                                              \
  template Var<T> d_ebc(const DiscriminatorOutput<T>&, Var<T>, const Tensor<T>&, const DiscriminatorOutput<T>&, \
                        Var<T>, double, ReconNorm);                                                             \
  template Var<T> g_ae(const DiscriminatorOutput<T>&, Var<T>, const Tensor<T>&, ReconNorm);                     \
  template Var<T> d_ae(const DiscriminatorOutput<T>&, Var<T>, const Tensor<T>&, const DiscriminatorOutput<T>&,  \
                       ReconNorm);                                                                              \
  template Var<T> r_loss(Graph<T>&, models::Denoiser<T>&, const Tensor<T>&, ReconNorm, Rng*, double);           \
  template Var<T> g_dfmc(const DiscriminatorOutput<T>&, const Tensor<T>&, models::Denoiser<T>&, double,         \
                         ReconNorm);                                                                            \
  template Var<T> g_dfm(const DiscriminatorOutput<T>&, models::Denoiser<T>&, double, double, ReconNorm);        \
  template GanLoss<T> gan_unconditional(Var<T>, Var<T>, bool);

ARTGAN_INSTANTIATE_LOSSES(float)
ARTGAN_INSTANTIATE_LOSSES(double)

}  // namespace artgan::losses
