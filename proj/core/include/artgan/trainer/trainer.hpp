#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artgan/data/dataset.hpp"
#include "artgan/metrics/classifier.hpp"
#include "artgan/models/checkpoint.hpp"
#include "artgan/models/networks.hpp"
#include "artgan/trainer/adam.hpp"
#include "artgan/trainer/config.hpp"

namespace artgan::trainer {

/// Scalar outcome of one iteration. `iter` is 1-based.
struct LossRecord {
  std::size_t iter = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  std::optional<double> r_loss;
  std::vector<std::string> d_terms;
  std::vector<std::string> g_terms;
  double lr = 0.0;
  double sigma = 0.0;
};

void to_json(nlohmann::json& j, const LossRecord& r);

struct StepCounters {
  std::size_t d_steps = 0;
  std::size_t g_steps = 0;
  std::size_t r_steps = 0;
};

/// Full adversarial training state for one run: networks, optimizers,
/// RNG stream and iteration count. The dataset must outlive the trainer.
template <typename T>
class Trainer {
 public:
  Trainer(const RunConfig& cfg, const data::Dataset& ds);

  /// One iteration: real batch, z and labels, generator forward (pooled
  /// under IQ), instance noise on discriminator inputs, one Adam step on D,
  /// one on the denoiser (DFM), then a fresh discriminator pass on the same
  /// fakes and one Adam step on G. Any non-finite value throws NumericError
  /// prefixed with the iteration number.
  LossRecord step();

  std::size_t iteration() const { return iter_; }
  const StepCounters& counters() const { return counters_; }
  const RunConfig& config() const { return cfg_; }
  const models::ModelConfig& model_config() const { return model_; }
  models::Generator<T>& generator() { return G_; }
  models::Discriminator<T>& discriminator() { return D_; }
  models::Denoiser<T>* denoiser() { return has_r_ ? &R_ : nullptr; }
  /// Shape of the last generator output and of the last tensors fed to D.
  const nd::Shape& last_generator_shape() const { return last_gen_shape_; }
  const nd::Shape& last_discriminator_shape() const { return last_disc_shape_; }

  /// Everything needed to continue bit-exactly.
  models::Checkpoint checkpoint() const;
  /// Inverse of checkpoint(); the stored run config must match this one.
  void restore(const models::Checkpoint& ck);

 private:
  void require_disc_input(const nd::Shape& s);
  LossRecord step_impl();

  RunConfig cfg_;
  models::ModelConfig model_;
  const data::Dataset* ds_;
  std::vector<std::size_t> train_idx_;
  std::vector<std::vector<std::size_t>> train_by_class_;

  models::Generator<T> G_;
  models::Discriminator<T> D_;
  models::Denoiser<T> R_;
  bool has_r_ = false;
  AdamState<T> adam_g_, adam_d_, adam_r_;
  Rng rng_{0};
  std::size_t iter_ = 0;
  StepCounters counters_;
  nd::Shape last_gen_shape_, last_disc_shape_;
};

/// Model description stored in a run checkpoint.
models::ModelConfig checkpoint_model(const models::Checkpoint& ck);
Precision checkpoint_precision(const models::Checkpoint& ck);
/// Generator weights and running statistics from a run checkpoint.
template <typename T>
models::Generator<T> load_generator(const models::Checkpoint& ck);

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  /// Enables score/fidelity logging every eval.every iterations.
  const metrics::EvalClassifier* classifier = nullptr;
  std::function<void(const LossRecord&)> on_step;
};

struct RunResult {
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> checkpoints;
  std::size_t iterations = 0;
};

/// Trains to total_iters, writing into out_dir:
///   config.resolved.conf   canonical config snapshot
///   log.ndjson             one JSON record per iteration
///   ckpt_NNNNNN.agck       every checkpoint_every iterations
///   samples_NNNNNN.png     grid, one row per class, at each checkpoint
///   final.agck
template <typename T>
RunResult run(const RunConfig& cfg, const data::Dataset& ds, const RunOptions& opts);

/// run<float> or run<double> per cfg.training.precision.
RunResult run_any(const RunConfig& cfg, const data::Dataset& ds, const RunOptions& opts);

/// Dataset named by cfg.data; relative paths resolve against ARTGAN_DATA_DIR.
data::Dataset load_dataset(const RunConfig& cfg);

}  // namespace artgan::trainer
