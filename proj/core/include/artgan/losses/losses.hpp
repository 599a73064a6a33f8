#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "artgan/models/networks.hpp"

namespace artgan::losses {

using models::DiscriminatorOutput;
using nd::Tensor;
using nd::Var;

enum class Variant { Baseline, EB, AE, DFM };
enum class ReconNorm { PerPixelMse, L2 };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
std::string to_string(ReconNorm n);
ReconNorm parse_recon_norm(const std::string& s);

/// Which discriminator/generator objectives a run trains with.
struct VariantConfig {
  Variant variant = Variant::AE;
  bool iq = true;
  double margin = 1.0;          ///< EB hinge margin m, in units of the recon norm.
  double lambda_denoise = -1.0; ///< Negative means 0.03 / n_h.
  double lambda_adv = 1.0;
  ReconNorm recon_norm = ReconNorm::PerPixelMse;
  bool denoiser_corruption = false;
  double corruption_sigma = 0.1;

  void validate() const;
  double denoise_weight(std::size_t hidden_width) const {
    return lambda_denoise < 0.0 ? 0.03 / double(hidden_width) : lambda_denoise;
  }
};

void to_json(nlohmann::json& j, const VariantConfig& c);
void from_json(const nlohmann::json& j, VariantConfig& c);

// Every function below returns a scalar Var recorded on the inputs' graph.
// Log-probabilities are formed from logits (log-softmax, log-sigmoid of the
// log-sum-exp), never as the log of a probability.

/// Categorical discriminator loss: real samples are pushed toward their
/// labelled class and toward "real", generated samples toward "fake".
template <typename T>
Var<T> d_cat(const DiscriminatorOutput<T>& real, const Tensor<T>& real_onehot, const DiscriminatorOutput<T>& fake);

/// Generator label-feedback loss: generated samples should be classified as
/// their assigned label and as real.
template <typename T>
Var<T> g_cat(const DiscriminatorOutput<T>& fake, const Tensor<T>& fake_onehot);

/// Reconstruction error per sample (N).
template <typename T>
Var<T> recon_per_sample(Var<T> x, Var<T> recon, ReconNorm norm);
/// Batch mean of recon_per_sample.
template <typename T>
Var<T> recon_loss(Var<T> x, Var<T> recon, ReconNorm norm);

/// Energy-based discriminator loss: real reconstruction error plus a hinge
/// max(0, m - e) on each generated sample's error.
template <typename T>
Var<T> d_eb(Var<T> real_x, Var<T> real_recon, Var<T> fake_x, Var<T> fake_recon, double margin, ReconNorm norm);
/// Energy-based generator loss: mean reconstruction error of generated samples.
template <typename T>
Var<T> g_eb(Var<T> fake_x, Var<T> fake_recon, ReconNorm norm);

/// d_cat + d_eb.
template <typename T>
Var<T> d_ebc(const DiscriminatorOutput<T>& real, Var<T> real_x, const Tensor<T>& real_onehot,
             const DiscriminatorOutput<T>& fake, Var<T> fake_x, double margin, ReconNorm norm);
/// g_cat + g_eb; the generator loss of both EB and AE variants.
template <typename T>
Var<T> g_ae(const DiscriminatorOutput<T>& fake, Var<T> fake_x, const Tensor<T>& fake_onehot, ReconNorm norm);
/// d_cat + reconstruction of real samples only; generated samples never
/// reach the decoder through this loss.
template <typename T>
Var<T> d_ae(const DiscriminatorOutput<T>& real, Var<T> real_x, const Tensor<T>& real_onehot,
            const DiscriminatorOutput<T>& fake, ReconNorm norm);

/// Denoiser loss on real features. `phi_real` enters as a constant so only
/// r's parameters receive gradient. With `corruption_rng` set, r sees
/// phi + sigma * N(0, 1) and is scored against the clean phi.
template <typename T>
Var<T> r_loss(nd::Graph<T>& g, models::Denoiser<T>& r, const Tensor<T>& phi_real, ReconNorm norm,
              Rng* corruption_rng = nullptr, double sigma = 0.0);

/// Conditional denoising feature matching generator loss:
/// lambda * mean ||Phi(G) - r(Phi(G))|| + g_cat. r is frozen.
template <typename T>
Var<T> g_dfmc(const DiscriminatorOutput<T>& fake, const Tensor<T>& fake_onehot, models::Denoiser<T>& r,
              double lambda_denoise, ReconNorm norm);

/// Unconditional denoising feature matching generator loss:
/// lambda_denoise * feature term - lambda_adv * log D(G), with log D taken
/// from the categorical head as log sigmoid(logsumexp(l)).
template <typename T>
Var<T> g_dfm(const DiscriminatorOutput<T>& fake, models::Denoiser<T>& r, double lambda_denoise, double lambda_adv,
             ReconNorm norm);

template <typename T>
struct GanLoss {
  Var<T> d;
  Var<T> g;
};

/// Two-player objective on adversarial logits a, D = sigmoid(a):
/// d = -mean log D(x) - mean log(1 - D(G)); g = -mean log D(G)
/// (non-saturating) or mean log(1 - D(G)) when `saturating`.
template <typename T>
GanLoss<T> gan_unconditional(Var<T> real_logit, Var<T> fake_logit, bool saturating = false);

}  // namespace artgan::losses
