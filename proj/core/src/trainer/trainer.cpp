#include "artgan/trainer/trainer.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "artgan/data/image_io.hpp"
#include "artgan/errors.hpp"
#include "artgan/losses/losses.hpp"

namespace artgan::trainer {

namespace fs = std::filesystem;
using losses::Variant;
using models::Checkpoint;
using models::one_hot;
using nd::BnMode;
using nd::Graph;
using nd::Shape;
using nd::Tensor;

void to_json(nlohmann::json& j, const LossRecord& r) {
  j = nlohmann::json{{"iter", r.iter}, {"d_loss", r.d_loss}, {"g_loss", r.g_loss}};
  if (r.r_loss) j["r_loss"] = *r.r_loss;
  j["lr"] = r.lr;
  j["sigma"] = r.sigma;
}

namespace {

constexpr std::uint64_t kStreamSalt = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kGridSalt = 0xc2b2ae3d27d4eb4full;

template <typename T>
void zero_grads(const models::TensorList<T>& list) {
  for (const auto& [name, t] : list) t->zero_grad();
}

template <typename T>
models::TensorList<T> moment_list(const models::TensorList<T>& params, std::vector<Tensor<T>>& moments) {
  models::TensorList<T> out;
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(params[i].first, &moments[i]);
  return out;
}

template <typename T>
Tensor<T> plus(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out = a;
  auto o = out.data();
  auto s = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += s[i];
  return out;
}

std::string iteration_prefix(std::size_t iter) { return "iteration " + std::to_string(iter) + ": "; }

}  // namespace

template <typename T>
Trainer<T>::Trainer(const RunConfig& cfg, const data::Dataset& ds) : cfg_(cfg), ds_(&ds) {
  cfg_.validate();
  ds.validate();
  model_ = cfg_.resolved_model();
  model_.num_classes = ds.num_classes();
  model_.channels = ds.channels;
  model_.validate();
  if (cfg_.data.crop == 0 && (ds.height != model_.train_size || ds.width != model_.train_size))
    throw ConfigError("dataset images are " + std::to_string(ds.height) + "x" + std::to_string(ds.width) +
                      " but model.train_size is " + std::to_string(model_.train_size) + " (set data.crop to resize)");
  if (cfg_.data.crop > std::min(ds.height, ds.width))
    throw ConfigError("data.crop exceeds the dataset image size");

  train_idx_ = ds.indices(data::Split::Train);
  train_by_class_ = ds.by_class(data::Split::Train);
  if (train_idx_.empty()) throw ConfigError("dataset has no training samples");
  for (std::size_t c = 0; c < train_by_class_.size(); ++c)
    if (train_by_class_[c].empty())
      throw ConfigError("class " + std::to_string(c) + " has no training samples");
  if (cfg_.training.class_sampling.mode == SamplingMode::Subset &&
      cfg_.training.class_sampling.classes_per_iter > ds.num_classes())
    throw ConfigError("class_sampling.classes_per_iter exceeds the dataset's class count");

  Rng init(cfg_.training.seed);
  G_ = models::Generator<T>(model_, init);
  D_ = models::Discriminator<T>(model_, init);
  has_r_ = cfg_.variant.variant == Variant::DFM;
  if (has_r_) R_ = models::Denoiser<T>(D_.hidden_width(), model_.denoiser_hidden, model_.init_std, model_.leaky_slope, init);
  adam_g_ = AdamState<T>(G_.parameters());
  adam_d_ = AdamState<T>(D_.parameters());
  if (has_r_) adam_r_ = AdamState<T>(R_.parameters());
  rng_ = Rng(cfg_.training.seed ^ kStreamSalt);
}

template <typename T>
void Trainer<T>::require_disc_input(const Shape& s) {
  if (s.size() != 4 || s[2] != model_.train_size || s[3] != model_.train_size)
    throw DimensionError("discriminator input " + nd::to_string(s) + " is not " + std::to_string(model_.train_size) +
                         "x" + std::to_string(model_.train_size));
  last_disc_shape_ = s;
}

template <typename T>
LossRecord Trainer<T>::step() {
  try {
    return step_impl();
  } catch (const NumericError& e) {
    throw NumericError(iteration_prefix(iter_ + 1) + e.what());
  }
}

template <typename T>
LossRecord Trainer<T>::step_impl() {
  const auto& tc = cfg_.training;
  const auto& vc = cfg_.variant;
  const std::size_t t = iter_;
  const std::size_t K = model_.num_classes;
  LossRecord rec;
  rec.iter = t + 1;
  rec.lr = tc.lr_at(t);
  rec.sigma = tc.sigma_at(t);
  const AdamHyper hyper = tc.adam();

  // Real batch and generator labels.
  std::vector<std::size_t> idx;
  std::vector<int> fake_labels;
  if (tc.class_sampling.mode == SamplingMode::Subset) {
    fake_labels = sample_batch_labels(tc, K, rng_);
    for (int l : fake_labels) {
      const auto& pool = train_by_class_[std::size_t(l)];
      idx.push_back(pool[rng_.below(pool.size())]);
    }
  } else {
    for (std::size_t i = 0; i < tc.batch; ++i) idx.push_back(train_idx_[rng_.below(train_idx_.size())]);
    fake_labels = sample_batch_labels(tc, K, rng_);
  }
  Tensor<T> x_real = ds_->images<T>(idx);
  if (cfg_.data.crop) x_real = data::random_crop_resize(x_real, cfg_.data.crop, model_.train_size, rng_);
  const auto real_onehot = one_hot<T>(ds_->labels_at(idx), K);
  const auto fake_onehot = one_hot<T>(fake_labels, K);

  Tensor<T> z(Shape{tc.batch, model_.z_dim});
  for (auto& v : z.data()) v = T(rng_.uniform(-1.0, 1.0));

  Tensor<T> noise_real(x_real.shape()), noise_fake(x_real.shape());
  if (rec.sigma > 0.0) {
    for (auto& v : noise_real.data()) v = T(rec.sigma * rng_.normal());
    for (auto& v : noise_fake.data()) v = T(rec.sigma * rng_.normal());
  }

  // Generator forward; this graph is reused for the generator update.
  Graph<T> gg;
  auto generated = G_.forward(gg, gg.constant(z), gg.constant(fake_onehot), BnMode::Train, true);
  last_gen_shape_ = generated.shape();
  auto fake = model_.iq ? nd::avgpool_overlap(generated) : generated;
  require_disc_input(fake.shape());

  const bool eb = vc.variant == Variant::EB, ae = vc.variant == Variant::AE;
  const auto norm = vc.recon_norm;

  // Discriminator step on noisy real and detached noisy fake inputs.
  Tensor<T> phi_real;
  {
    auto d_params = D_.parameters();
    zero_grads(d_params);
    Graph<T> gd;
    auto rx = gd.constant(plus(x_real, noise_real));
    auto fx = gd.constant(plus(fake.value(), noise_fake));
    require_disc_input(rx.shape());
    require_disc_input(fx.shape());
    auto ro = D_.forward(gd, rx, BnMode::Train, true, eb || ae, true);
    auto fo = D_.forward(gd, fx, BnMode::Train, true, eb, true);
    nd::Var<T> loss;
    if (eb) {
      loss = losses::d_ebc(ro, rx, real_onehot, fo, fx, vc.margin, norm);
      rec.d_terms = {"d_cat", "d_eb"};
    } else if (ae) {
      loss = losses::d_ae(ro, rx, real_onehot, fo, norm);
      rec.d_terms = {"d_cat", "recon_real"};
    } else {
      loss = losses::d_cat(ro, real_onehot, fo);
      rec.d_terms = {"d_cat"};
    }
    rec.d_loss = double(loss.value()[0]);
    if (has_r_) phi_real = ro.hidden.value();
    gd.backward(loss);
    adam_step(d_params, adam_d_, rec.lr, hyper);
    ++counters_.d_steps;
  }

  if (has_r_) {
    auto r_params = R_.parameters();
    zero_grads(r_params);
    Graph<T> gr;
    auto loss = losses::r_loss(gr, R_, phi_real, norm, vc.denoiser_corruption ? &rng_ : nullptr, vc.corruption_sigma);
    rec.r_loss = double(loss.value()[0]);
    gr.backward(loss);
    adam_step(r_params, adam_r_, rec.lr, hyper);
    ++counters_.r_steps;
  }

  // Generator step through the just-updated, frozen discriminator.
  {
    auto g_params = G_.parameters();
    zero_grads(g_params);
    auto fx = nd::add(fake, gg.constant(noise_fake));
    require_disc_input(fx.shape());
    auto fo = D_.forward(gg, fx, BnMode::Train, false, eb || ae, false);
    nd::Var<T> loss;
    if (eb || ae) {
      loss = losses::g_ae(fo, fx, fake_onehot, norm);
      rec.g_terms = {"g_cat", "g_eb"};
    } else if (has_r_) {
      loss = losses::g_dfmc(fo, fake_onehot, R_, vc.denoise_weight(D_.hidden_width()), norm);
      rec.g_terms = {"g_cat", "feature"};
    } else {
      loss = losses::g_cat(fo, fake_onehot);
      rec.g_terms = {"g_cat"};
    }
    rec.g_loss = double(loss.value()[0]);
    gg.backward(loss);
    adam_step(g_params, adam_g_, rec.lr, hyper);
    ++counters_.g_steps;
  }

  ++iter_;
  return rec;
}

template <typename T>
Checkpoint Trainer<T>::checkpoint() const {
  auto& self = const_cast<Trainer&>(*this);
  Checkpoint ck;
  ck.config = {{"kind", "artgan_run"},
               {"run", cfg_},
               {"model", model_},
               {"precision", to_string(std::is_same_v<T, double> ? Precision::F64 : Precision::F32)},
               {"iteration", iter_},
               {"rng", rng_.state()},
               {"counters", {{"d", counters_.d_steps}, {"g", counters_.g_steps}, {"r", counters_.r_steps}}},
               {"adam_t", {{"g", adam_g_.t}, {"d", adam_d_.t}, {"r", adam_r_.t}}},
               {"class_names", ds_->class_names}};
  auto put_net = [&](const std::string& p, const models::TensorList<T>& params, AdamState<T>& adam) {
    ck.put_all(p, params);
    ck.put_all(p + ".adam_m", moment_list(params, adam.m));
    ck.put_all(p + ".adam_v", moment_list(params, adam.v));
  };
  put_net("G", self.G_.parameters(), self.adam_g_);
  ck.put_all("G.buf", self.G_.buffers());
  put_net("D", self.D_.parameters(), self.adam_d_);
  ck.put_all("D.buf", self.D_.buffers());
  if (has_r_) put_net("R", self.R_.parameters(), self.adam_r_);
  return ck;
}

template <typename T>
void Trainer<T>::restore(const Checkpoint& ck) {
  if (ck.config.value("kind", "") != "artgan_run") throw ConfigError("checkpoint is not a training run");
  if (ck.config.at("model") != nlohmann::json(model_))
    throw ConfigError("checkpoint model does not match the run configuration");
  if (ck.config.at("run").at("variant") != nlohmann::json(cfg_).at("variant"))
    throw ConfigError("checkpoint variant does not match the run configuration");
  auto get_net = [&](const std::string& p, const models::TensorList<T>& params, AdamState<T>& adam) {
    ck.get_all(p, params);
    ck.get_all(p + ".adam_m", moment_list(params, adam.m));
    ck.get_all(p + ".adam_v", moment_list(params, adam.v));
  };
  get_net("G", G_.parameters(), adam_g_);
  ck.get_all("G.buf", G_.buffers());
  get_net("D", D_.parameters(), adam_d_);
  ck.get_all("D.buf", D_.buffers());
  if (has_r_) get_net("R", R_.parameters(), adam_r_);
  const auto& c = ck.config;
  iter_ = c.at("iteration").get<std::size_t>();
  rng_.set_state(c.at("rng").get<std::string>());
  counters_ = {c.at("counters").at("d").get<std::size_t>(), c.at("counters").at("g").get<std::size_t>(),
               c.at("counters").at("r").get<std::size_t>()};
  adam_g_.t = c.at("adam_t").at("g").get<std::uint64_t>();
  adam_d_.t = c.at("adam_t").at("d").get<std::uint64_t>();
  adam_r_.t = c.at("adam_t").at("r").get<std::uint64_t>();
}

models::ModelConfig checkpoint_model(const Checkpoint& ck) {
  if (ck.config.value("kind", "") != "artgan_run") throw ConfigError("checkpoint is not a training run");
  return ck.config.at("model").get<models::ModelConfig>();
}

Precision checkpoint_precision(const Checkpoint& ck) {
  return parse_precision(ck.config.at("precision").get<std::string>());
}

template <typename T>
models::Generator<T> load_generator(const Checkpoint& ck) {
  Rng unused(0);
  models::Generator<T> G(checkpoint_model(ck), unused);
  ck.get_all("G", G.parameters());
  ck.get_all("G.buf", G.buffers());
  return G;
}

namespace {

std::string numbered(const char* stem, std::size_t iter, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu%s", stem, iter, ext);
  return buf;
}

template <typename T>
void write_samples(models::Generator<T>& G, const RunConfig& cfg, const fs::path& path) {
  const auto& m = G.config();
  const std::size_t per = std::max<std::size_t>(1, cfg.eval.grid_per_class);
  Rng rng(cfg.training.seed ^ kGridSalt);
  std::vector<int> labels;
  for (std::size_t c = 0; c < m.num_classes; ++c) labels.insert(labels.end(), per, int(c));
  Tensor<T> z(Shape{labels.size(), m.z_dim});
  for (auto& v : z.data()) v = T(rng.uniform(-1.0, 1.0));
  data::write_image_grid(models::generate(G, z, labels), path, per);
}

}  // namespace

template <typename T>
RunResult run(const RunConfig& cfg, const data::Dataset& ds, const RunOptions& opts) {
  fs::create_directories(opts.out_dir);
  Trainer<T> trainer(cfg, ds);
  if (opts.resume) trainer.restore(Checkpoint::load(*opts.resume));
  cfg.save(opts.out_dir / "config.resolved.conf");

  const auto log_path = opts.out_dir / "log.ndjson";
  std::ofstream log(log_path, opts.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError(log_path.string() + ": cannot open for writing");

  RunResult result;
  const auto& tc = cfg.training;
  while (trainer.iteration() < tc.total_iters) {
    const auto rec = trainer.step();
    nlohmann::json line = rec;
    if (opts.classifier && cfg.eval.every && rec.iter % cfg.eval.every == 0) {
      Rng eval_rng(tc.seed + rec.iter);
      const auto e = metrics::evaluate_generator(trainer.generator(), *opts.classifier, cfg.eval.samples_per_class,
                                                 cfg.eval.splits, eval_rng);
      line["objectness"] = e.report.objectness;
      line["diversity"] = e.report.class_diversity;
      line["score"] = e.report.score;
      line["fidelity"] = e.fidelity;
    }
    log << line.dump() << '\n';
    if (!log) throw IoError(log_path.string() + ": write failed");
    if (opts.on_step) opts.on_step(rec);

    if (tc.checkpoint_every && rec.iter % tc.checkpoint_every == 0) {
      const auto path = opts.out_dir / numbered("ckpt", rec.iter, ".agck");
      trainer.checkpoint().save(path);
      result.checkpoints.push_back(path);
      write_samples(trainer.generator(), cfg, opts.out_dir / numbered("samples", rec.iter, ".png"));
    }
  }
  log.flush();
  result.final_checkpoint = opts.out_dir / "final.agck";
  trainer.checkpoint().save(result.final_checkpoint);
  result.iterations = trainer.iteration();
  return result;
}

RunResult run_any(const RunConfig& cfg, const data::Dataset& ds, const RunOptions& opts) {
  return cfg.training.precision == Precision::F64 ? run<double>(cfg, ds, opts) : run<float>(cfg, ds, opts);
}

data::Dataset load_dataset(const RunConfig& cfg) {
  const auto& d = cfg.data;
  if (d.source == "toy") return data::make_toy_shapes(d.toy_classes, d.toy_per_class, d.toy_size, d.toy_seed);
  fs::path path = d.path;
  if (path.is_relative()) {
    if (const char* root = std::getenv("ARTGAN_DATA_DIR")) path = fs::path(root) / path;
  }
  if (!fs::exists(path)) throw ConfigError("data.path " + path.string() + " does not exist");
  if (d.source == "cifar10") return data::load_cifar10(path);
  if (d.source == "png_dir") return data::load_png_directory(path);
  // cifar_bin: <path>/train.bin and <path>/test.bin with classes listed in <path>/classes.txt.
  data::Dataset ds;
  std::ifstream names(path / "classes.txt");
  if (!names) throw IoError((path / "classes.txt").string() + ": cannot open");
  for (std::string line; std::getline(names, line);)
    if (!line.empty()) ds.class_names.push_back(line);
  std::ifstream geom(path / "geometry.txt");
  if (!geom || !(geom >> ds.channels >> ds.height >> ds.width))
    throw IoError((path / "geometry.txt").string() + ": expected 'channels height width'");
  data::read_cifar_binary(path / "train.bin", data::Split::Train, ds);
  if (fs::exists(path / "test.bin")) data::read_cifar_binary(path / "test.bin", data::Split::Test, ds);
  ds.validate();
  return ds;
}

template class Trainer<float>;
template class Trainer<double>;
template models::Generator<float> load_generator(const Checkpoint&);
template models::Generator<double> load_generator(const Checkpoint&);
template RunResult run<float>(const RunConfig&, const data::Dataset&, const RunOptions&);
template RunResult run<double>(const RunConfig&, const data::Dataset&, const RunOptions&);

}  // namespace artgan::trainer
