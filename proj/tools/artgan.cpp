// artgan: train, sample, interpolate and evaluate conditional GANs.
//
// Exit codes: 0 success, 1 numeric failure, 2 usage or configuration
// error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "artgan/data/image_io.hpp"
#include "artgan/errors.hpp"
#include "artgan/metrics/classifier.hpp"
#include "artgan/ndgrad/gradcheck.hpp"
#include "artgan/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace artgan;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kNumeric = 1, kUsage = 2, kIo = 3 };

struct CommonFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string precision;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool out_required) {
  cmd->add_option("--config", f.config, "Run config file (key = value lines)");
  cmd->add_option("--set", f.overrides, "Override one config key: key=value (repeatable)");
  auto* out = cmd->add_option("--out", f.out, "Output directory");
  if (out_required) out->required();
  cmd->add_option("--seed", f.seed, "Seed (overrides the config)");
  cmd->add_option("--precision", f.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
  cmd->add_flag("--deterministic", f.deterministic, "Reproducible single-threaded execution");
}

trainer::RunConfig resolve(const CommonFlags& f) {
  auto cfg = f.config.empty() ? trainer::RunConfig{} : trainer::RunConfig::load(f.config);
  for (const auto& o : f.overrides) cfg.apply_override(o);
  if (f.seed) cfg.training.seed = *f.seed;
  if (!f.precision.empty()) cfg.training.precision = trainer::parse_precision(f.precision);
  if (f.deterministic) cfg.deterministic = true;
  cfg.validate();
  return cfg;
}

/// Snapshot of a non-training command's resolved inputs.
void write_snapshot(const fs::path& dir, const std::string& name, const json& j) {
  fs::create_directories(dir);
  const auto path = dir / (name + ".resolved.json");
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string() + ": write failed");
}

template <typename T>
nd::Tensor<T> uniform_z(std::size_t n, std::size_t dim, Rng& rng) {
  nd::Tensor<T> z(nd::Shape{n, dim});
  for (auto& v : z.data()) v = T(rng.uniform(-1.0, 1.0));
  return z;
}

struct GenerateArgs {
  std::string checkpoint;
  std::string cls = "all";
  std::size_t n = 8;
  std::uint64_t seed = 1;
  bool full_res = false;
  std::string out;
};

template <typename T>
void generate_impl(const models::Checkpoint& ck, const GenerateArgs& a) {
  auto G = trainer::load_generator<T>(ck);
  const auto& m = G.config();
  std::vector<int> classes;
  if (a.cls == "all") {
    for (std::size_t c = 0; c < m.num_classes; ++c) classes.push_back(int(c));
  } else {
    const int c = std::stoi(a.cls);
    if (c < 0 || std::size_t(c) >= m.num_classes) throw ConfigError("--class must be in [0, K) or 'all'");
    classes.push_back(c);
  }
  std::vector<int> labels;
  for (int c : classes) labels.insert(labels.end(), a.n, c);
  Rng rng(a.seed);
  const auto z = uniform_z<T>(labels.size(), m.z_dim, rng);
  const auto images = models::generate(G, z, labels, a.full_res);
  fs::create_directories(a.out);
  data::write_image_grid(images, fs::path(a.out) / "samples.png", a.n);
  std::cout << "wrote " << images.shape()[0] << " images of " << images.shape()[2] << "x" << images.shape()[3]
            << " to " << (fs::path(a.out) / "samples.png").string() << '\n';
}

struct InterpolateArgs {
  std::string checkpoint;
  int cls = 0;
  std::size_t steps = 10;
  std::uint64_t seed_a = 1, seed_b = 2;
  bool full_res = false;
  std::string out;
};

template <typename T>
void interpolate_impl(const models::Checkpoint& ck, const InterpolateArgs& a) {
  auto G = trainer::load_generator<T>(ck);
  const auto& m = G.config();
  if (a.cls < 0 || std::size_t(a.cls) >= m.num_classes) throw ConfigError("--class must be in [0, K)");
  Rng ra(a.seed_a), rb(a.seed_b);
  const auto za = uniform_z<T>(1, m.z_dim, ra), zb = uniform_z<T>(1, m.z_dim, rb);
  const auto line = models::latent_line(za, zb, a.steps);
  const auto strip = models::generate(G, line, std::vector<int>(a.steps, a.cls), a.full_res);
  fs::create_directories(a.out);
  data::write_image_grid(strip, fs::path(a.out) / "interpolation.png", a.steps);
  std::cout << "wrote " << a.steps << "-step interpolation to " << (fs::path(a.out) / "interpolation.png").string()
            << '\n';
}

struct EvaluateArgs {
  std::string checkpoint, classifier, out;
  std::size_t n = 100;
  std::size_t splits = 10;
  std::uint64_t seed = 1;
};

template <typename T>
json evaluate_impl(const models::Checkpoint& ck, const EvaluateArgs& a) {
  auto G = trainer::load_generator<T>(ck);
  const auto cls = metrics::EvalClassifier::load(a.classifier);
  Rng rng(a.seed);
  const auto e = metrics::evaluate_generator(G, cls, a.n, a.splits, rng);
  return json{{"report", e.report}, {"fidelity", e.fidelity}, {"iteration", ck.config.at("iteration")}};
}

int run_gradcheck() {
  std::size_t failures = 0;
  std::printf("%-36s %12s %8s %s\n", "case", "max_rel_err", "checked", "result");
  for (const auto& c : nd::standard_suite()) {
    const auto r = nd::check_gradients(c);
    std::printf("%-36s %12.3e %8zu %s\n", r.name.c_str(), r.max_rel_error, r.checked, r.passed ? "PASS" : "FAIL");
    failures += !r.passed;
  }
  std::printf("ops covered: %zu\n", nd::registered_ops().size());
  return failures ? kNumeric : kOk;
}

void inspect(const std::string& path) {
  const auto ck = models::Checkpoint::load(path);
  std::cout << ck.config.dump(2) << '\n';
  for (const auto& r : ck.records()) {
    std::cout << (r.dtype == models::DType::F64 ? "f64 " : "f32 ") << r.name << " [";
    for (std::size_t i = 0; i < r.shape.size(); ++i) std::cout << (i ? "," : "") << r.shape[i];
    std::cout << "]\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ArtGAN: conditional image synthesis with categorical autoencoder discriminators"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string resume, train_classifier;
  auto* train = app.add_subcommand("train", "Train a generator/discriminator pair");
  add_common(train, train_flags, true);
  train->add_option("--resume", resume, "Continue from a run checkpoint");
  train->add_option("--classifier", train_classifier, "Evaluation classifier for periodic score logging");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Sample images from a checkpoint");
  generate->add_option("--checkpoint", gen.checkpoint, "Run checkpoint (.agck)")->required();
  generate->add_option("--class", gen.cls, "Class index or 'all'");
  generate->add_option("--n", gen.n, "Samples per class");
  generate->add_option("--seed", gen.seed, "Seed of the latent codes");
  generate->add_flag("--full-res", gen.full_res, "Emit the unpooled 2x output of an IQ model");
  generate->add_option("--out", gen.out, "Output directory")->required();

  InterpolateArgs interp;
  auto* interpolate = app.add_subcommand("interpolate", "Walk the latent line between two codes");
  interpolate->add_option("--checkpoint", interp.checkpoint, "Run checkpoint (.agck)")->required();
  interpolate->add_option("--class", interp.cls, "Class index held fixed along the line")->required();
  interpolate->add_option("--steps", interp.steps, "Images on the line, endpoints included (>= 2)");
  interpolate->add_option("--seed-a", interp.seed_a, "Seed of z_a");
  interpolate->add_option("--seed-b", interp.seed_b, "Seed of z_b");
  interpolate->add_flag("--full-res", interp.full_res, "Emit the unpooled 2x output of an IQ model");
  interpolate->add_option("--out", interp.out, "Output directory")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint with an evaluation classifier");
  evaluate->add_option("--checkpoint", ev.checkpoint, "Run checkpoint (.agck)")->required();
  evaluate->add_option("--classifier", ev.classifier, "Evaluation classifier checkpoint")->required();
  evaluate->add_option("--n", ev.n, "Samples per class");
  evaluate->add_option("--splits", ev.splits, "Equal chunks for the split statistics");
  evaluate->add_option("--seed", ev.seed, "Seed of the latent codes");
  evaluate->add_option("--out", ev.out, "Also write report.json here");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");

  std::string inspect_path;
  auto* insp = app.add_subcommand("inspect", "Print a checkpoint's config and records");
  insp->add_option("checkpoint", inspect_path, "Any .agck file")->required();

  CommonFlags cls_flags;
  metrics::ClassifierConfig cls_cfg;
  auto* train_cls = app.add_subcommand("train-classifier", "Train the evaluation classifier on a dataset");
  add_common(train_cls, cls_flags, true);
  train_cls->add_option("--epochs", cls_cfg.epochs, "Passes over the training split");
  train_cls->add_option("--width", cls_cfg.width, "Channels of both conv layers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) {
      const auto cfg = resolve(train_flags);
      const auto ds = trainer::load_dataset(cfg);
      std::optional<metrics::EvalClassifier> cls;
      if (!train_classifier.empty()) cls = metrics::EvalClassifier::load(train_classifier);
      trainer::RunOptions opts;
      opts.out_dir = train_flags.out;
      if (!resume.empty()) opts.resume = resume;
      opts.classifier = cls ? &*cls : nullptr;
      opts.on_step = [&](const trainer::LossRecord& r) {
        if (r.iter % 100 == 0 || r.iter == cfg.training.total_iters)
          std::printf("iter %zu  d %.4f  g %.4f\n", r.iter, r.d_loss, r.g_loss);
      };
      const auto res = trainer::run_any(cfg, ds, opts);
      std::cout << "final checkpoint " << res.final_checkpoint.string() << '\n';
    } else if (*generate) {
      const auto ck = models::Checkpoint::load(gen.checkpoint);
      write_snapshot(gen.out, "generate",
                     {{"checkpoint", gen.checkpoint}, {"class", gen.cls}, {"n", gen.n}, {"seed", gen.seed},
                      {"full_res", gen.full_res}});
      trainer::checkpoint_precision(ck) == trainer::Precision::F64 ? generate_impl<double>(ck, gen)
                                                                    : generate_impl<float>(ck, gen);
    } else if (*interpolate) {
      const auto ck = models::Checkpoint::load(interp.checkpoint);
      write_snapshot(interp.out, "interpolate",
                     {{"checkpoint", interp.checkpoint}, {"class", interp.cls}, {"steps", interp.steps},
                      {"seed_a", interp.seed_a}, {"seed_b", interp.seed_b}, {"full_res", interp.full_res}});
      trainer::checkpoint_precision(ck) == trainer::Precision::F64 ? interpolate_impl<double>(ck, interp)
                                                                    : interpolate_impl<float>(ck, interp);
    } else if (*evaluate) {
      const auto ck = models::Checkpoint::load(ev.checkpoint);
      const auto j = trainer::checkpoint_precision(ck) == trainer::Precision::F64 ? evaluate_impl<double>(ck, ev)
                                                                                   : evaluate_impl<float>(ck, ev);
      std::cout << j.dump(2) << '\n';
      if (!ev.out.empty()) {
        write_snapshot(ev.out, "evaluate",
                       {{"checkpoint", ev.checkpoint}, {"classifier", ev.classifier}, {"n", ev.n},
                        {"splits", ev.splits}, {"seed", ev.seed}});
        std::ofstream(fs::path(ev.out) / "report.json") << j.dump(2) << '\n';
      }
    } else if (*gradcheck) {
      return run_gradcheck();
    } else if (*insp) {
      inspect(inspect_path);
    } else if (*train_cls) {
      auto cfg = resolve(cls_flags);
      cls_cfg.seed = cfg.training.seed;
      const auto ds = trainer::load_dataset(cfg);
      const auto cls = metrics::EvalClassifier::train(ds, cls_cfg, [](std::size_t epoch, double loss) {
        std::printf("epoch %zu  loss %.4f\n", epoch + 1, loss);
      });
      fs::create_directories(cls_flags.out);
      cfg.save(fs::path(cls_flags.out) / "config.resolved.conf");
      cls.save(fs::path(cls_flags.out) / "classifier.agck");
      const double acc = ds.count(data::Split::Test) ? cls.accuracy(ds, data::Split::Test) : 0.0;
      std::printf("held-out accuracy %.4f\n", acc);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: argument out of range: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
