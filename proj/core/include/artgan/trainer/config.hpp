#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "artgan/losses/losses.hpp"
#include "artgan/models/config.hpp"
#include "artgan/rng.hpp"
#include "artgan/trainer/adam.hpp"

namespace artgan::trainer {

enum class Precision { F32, F64 };
enum class SamplingMode { All, Subset };

std::string to_string(Precision p);
Precision parse_precision(const std::string& s);

struct InstanceNoiseConfig {
  double sigma0 = 0.1;
  /// Iteration count over which sigma falls linearly to 0; unset = total_iters.
  std::optional<std::size_t> anneal_to_iter;
};

struct ClassSamplingConfig {
  SamplingMode mode = SamplingMode::All;
  std::size_t classes_per_iter = 0;
  /// 0 means batch / classes_per_iter.
  std::size_t samples_per_class = 0;
};

struct TrainingConfig {
  double lr0 = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch = 100;
  std::size_t lr_drop_iter = 30000;
  double lr_drop_factor = 10.0;
  std::size_t total_iters = 70000;
  std::size_t checkpoint_every = 1000;  ///< 0 disables periodic checkpoints.
  std::size_t z_dim = 100;
  InstanceNoiseConfig instance_noise;
  ClassSamplingConfig class_sampling;
  std::uint64_t seed = 1;
  Precision precision = Precision::F32;

  void validate() const;
  /// Schedules take t = iterations already completed, so the t-th call
  /// configures iteration t + 1.
  double lr_at(std::size_t t) const { return t < lr_drop_iter ? lr0 : lr0 / lr_drop_factor; }
  double sigma_at(std::size_t t) const;
  std::size_t samples_per_class() const;
  AdamHyper adam() const { return {beta1, beta2, 1e-8}; }
};

/// Generator labels c-bar for one iteration. All mode: `batch` labels
/// uniform over K. Subset mode: classes_per_iter distinct classes, each
/// repeated samples_per_class times, in draw order.
std::vector<int> sample_batch_labels(const TrainingConfig& cfg, std::size_t num_classes, Rng& rng);

struct DataConfig {
  std::string source = "toy";  ///< toy | cifar10 | cifar_bin | png_dir
  std::string path;            ///< Relative paths resolve against ARTGAN_DATA_DIR.
  std::size_t crop = 0;        ///< >0: random crop then resize to model.train_size.
  std::size_t toy_classes = 4;
  std::size_t toy_per_class = 500;
  std::size_t toy_size = 16;
  std::uint64_t toy_seed = 7;
};

struct EvalConfig {
  std::size_t every = 0;  ///< Score logging period in iterations; 0 disables it.
  std::size_t samples_per_class = 100;
  std::size_t splits = 10;
  std::string classifier;  ///< Evaluation classifier checkpoint.
  std::size_t grid_per_class = 8;
};

/// Everything a run needs. Serialized as flat `key = value` lines whose
/// keys are the field paths; '#' starts a comment.
struct RunConfig {
  TrainingConfig training;
  models::ModelConfig model;
  losses::VariantConfig variant;
  DataConfig data;
  EvalConfig eval;
  bool deterministic = true;

  /// Applies one key; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// Applies "key=value".
  void apply_override(const std::string& assignment);
  /// Every key in canonical order.
  static const std::vector<std::string>& keys();

  void validate() const;
  /// Canonical text form; parse(to_text()) reproduces the config exactly.
  std::string to_text() const;
  static RunConfig parse(std::string_view text, const std::string& origin = "<config>");
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Model config with the run's z_dim and iq applied.
  models::ModelConfig resolved_model() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

}  // namespace artgan::trainer
