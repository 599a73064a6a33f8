#include "artgan/models/config.hpp"

#include "artgan/errors.hpp"

namespace artgan::models {

std::size_t ModelConfig::stages() const {
  std::size_t s = 0;
  for (std::size_t size = train_size; size > 4; size /= 2) ++s;
  return s;
}

std::size_t ModelConfig::hidden_width() const {
  return (d_base << (stages() - 1)) * 16;
}

void ModelConfig::validate() const {
  if (train_size < 8 || (train_size & (train_size - 1)) != 0) {
    throw ConfigError("model.train_size must be a power of two >= 8, got " + std::to_string(train_size));
  }
  if (channels == 0) throw ConfigError("model.channels must be positive");
  if (num_classes < 1) throw ConfigError("model.num_classes must be positive");
  if (z_dim == 0) throw ConfigError("model.z_dim must be positive");
  if (g_base < 2 || d_base < 1 || denoiser_hidden < 1) throw ConfigError("model widths must be positive");
  if (leaky_slope < 0.0 || init_std <= 0.0) throw ConfigError("model.leaky_slope/init_std out of range");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"train_size", c.train_size},     {"channels", c.channels},   {"num_classes", c.num_classes},
                     {"z_dim", c.z_dim},               {"g_base", c.g_base},       {"d_base", c.d_base},
                     {"denoiser_hidden", c.denoiser_hidden}, {"iq", c.iq},       {"leaky_slope", c.leaky_slope},
                     {"init_std", c.init_std}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("train_size").get_to(c.train_size);
  j.at("channels").get_to(c.channels);
  j.at("num_classes").get_to(c.num_classes);
  j.at("z_dim").get_to(c.z_dim);
  j.at("g_base").get_to(c.g_base);
  j.at("d_base").get_to(c.d_base);
  j.at("denoiser_hidden").get_to(c.denoiser_hidden);
  j.at("iq").get_to(c.iq);
  j.at("leaky_slope").get_to(c.leaky_slope);
  j.at("init_std").get_to(c.init_std);
}

}  // namespace artgan::models
