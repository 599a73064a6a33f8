#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

namespace artgan::models {

/// Network sizing. Defaults give the DCGAN-scale 32x32 topology:
/// generator (z_dim+K) -> 256x4x4 -> 128 -> 64 -> C, encoder C -> 64 -> 128
/// -> 256 with stride-2 convs, and a mirrored decoder.
struct ModelConfig {
  std::size_t train_size = 32;  ///< Spatial size the discriminator sees.
  std::size_t channels = 3;
  std::size_t num_classes = 10;
  std::size_t z_dim = 100;
  std::size_t g_base = 256;  ///< Width of the generator's 4x4 seed.
  std::size_t d_base = 64;   ///< Width of the first encoder conv.
  std::size_t denoiser_hidden = 256;
  bool iq = false;  ///< Generator emits 2*train_size, pooled before the discriminator.
  double leaky_slope = 0.2;
  double init_std = 0.02;

  /// Number of stride-2 stages between train_size and the 4x4 bottleneck.
  std::size_t stages() const;
  std::size_t generator_output_size() const { return iq ? 2 * train_size : train_size; }
  /// Width of the discriminator's hidden feature Phi(x).
  std::size_t hidden_width() const;
  /// Throws ConfigError on impossible geometry.
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace artgan::models
