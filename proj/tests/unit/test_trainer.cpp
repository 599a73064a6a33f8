#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "artgan/errors.hpp"
#include "artgan/trainer/trainer.hpp"

using namespace artgan;
using namespace artgan::trainer;
using nd::Shape;
using nd::Tensor;

namespace fs = std::filesystem;

namespace {

RunConfig tiny_config(losses::Variant v = losses::Variant::AE, bool iq = true) {
  RunConfig c;
  c.variant.variant = v;
  c.variant.iq = iq;
  c.model.train_size = 8;
  c.model.g_base = 8;
  c.model.d_base = 4;
  c.model.denoiser_hidden = 8;
  c.training.z_dim = 6;
  c.training.batch = 8;
  c.training.total_iters = 10;
  c.training.checkpoint_every = 0;
  c.training.precision = Precision::F64;
  c.training.seed = 11;
  c.data.toy_classes = 4;
  c.data.toy_per_class = 20;
  c.data.toy_size = 8;
  c.data.toy_seed = 3;
  return c;
}

data::Dataset tiny_data(const RunConfig& c) { return load_dataset(c); }

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("artgan_test_trainer_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged and moments decay") {
  Tensor<double> w(Shape{3}, std::vector<double>{0.5, -1.0, 2.0});
  TensorList<double> params{{"w", &w}};
  AdamState<double> st(params);
  const AdamHyper h;

  w.enable_grad();
  adam_step(params, st, 1e-3, h);
  CHECK(st.t == 1);
  CHECK(w.vector() == std::vector<double>{0.5, -1.0, 2.0});
  for (double m : st.m[0].data()) CHECK(m == 0.0);

  std::fill(w.grad().begin(), w.grad().end(), 0.4);
  adam_step(params, st, 1e-3, h);
  const double m1 = st.m[0][0], v1 = st.v[0][0];
  w.zero_grad();
  adam_step(params, st, 1e-3, h);
  CHECK(st.m[0][0] == doctest::Approx(h.beta1 * m1).epsilon(1e-15));
  CHECK(st.v[0][0] == doctest::Approx(h.beta2 * v1).epsilon(1e-15));
}

TEST_CASE("adam: constant gradient follows the scalar recurrence") {
  const double lr = 2e-4, g = 0.3;
  const AdamHyper h;
  Tensor<double> w(Shape{1}, std::vector<double>{1.0});
  TensorList<double> params{{"w", &w}};
  AdamState<double> st(params);
  w.enable_grad();

  // First step moves by lr * g / (|g| + eps) once bias correction cancels.
  w.grad()[0] = g;
  adam_step(params, st, lr, h);
  CHECK(1.0 - w[0] == doctest::Approx(lr).epsilon(1e-7));

  double p = 1.0 - lr * g / (std::abs(g) + h.eps), m = (1 - h.beta1) * g, v = (1 - h.beta2) * g * g;
  CHECK(std::abs(w[0] - p) < 1e-15);
  for (int t = 2; t <= 6; ++t) {
    w.grad()[0] = g;
    adam_step(params, st, lr, h);
    m = h.beta1 * m + (1 - h.beta1) * g;
    v = h.beta2 * v + (1 - h.beta2) * g * g;
    const double mh = m / (1 - std::pow(h.beta1, t)), vh = v / (1 - std::pow(h.beta2, t));
    p -= lr * mh / (std::sqrt(vh) + h.eps);
    CHECK(std::abs(w[0] - p) < 1e-15);
  }
}

TEST_CASE("adam: non-finite gradient throws before any update") {
  Tensor<double> a(Shape{2}, std::vector<double>{1.0, 2.0});
  Tensor<double> b(Shape{2}, std::vector<double>{3.0, 4.0});
  TensorList<double> params{{"a", &a}, {"b", &b}};
  AdamState<double> st(params);
  a.enable_grad();
  b.enable_grad();
  a.grad()[0] = 1.0;
  b.grad()[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(params, st, 1e-3, AdamHyper{}), NumericError);
  CHECK(a.vector() == std::vector<double>{1.0, 2.0});
  CHECK(st.t == 0);
}

TEST_CASE("class-subset label sampling") {
  Rng rng(5);
  TrainingConfig t;
  t.batch = 100;
  t.class_sampling.mode = SamplingMode::Subset;
  t.class_sampling.classes_per_iter = 20;
  t.class_sampling.samples_per_class = 5;
  for (int rep = 0; rep < 20; ++rep) {
    const auto labels = sample_batch_labels(t, 102, rng);
    REQUIRE(labels.size() == 100);
    std::map<int, int> counts;
    for (int l : labels) {
      CHECK(l >= 0);
      CHECK(l < 102);
      ++counts[l];
    }
    CHECK(counts.size() == 20);
    for (auto [cls, n] : counts) CHECK(n == 5);
  }

  t.class_sampling.classes_per_iter = 10;
  t.class_sampling.samples_per_class = 10;
  std::map<int, int> counts;
  for (int l : sample_batch_labels(t, 10, rng)) ++counts[l];
  CHECK(counts.size() == 10);
  for (auto [cls, n] : counts) CHECK(n == 10);

  t.class_sampling.classes_per_iter = 20;
  t.class_sampling.samples_per_class = 5;
  CHECK_THROWS_AS(sample_batch_labels(t, 10, rng), ConfigError);

  TrainingConfig all;
  all.batch = 100;
  std::vector<int> hist(10, 0);
  for (int l : sample_batch_labels(all, 10, rng)) ++hist.at(std::size_t(l));
  int total = 0;
  for (int n : hist) total += n;
  CHECK(total == 100);
}

TEST_CASE("learning-rate and instance-noise schedules") {
  TrainingConfig t;
  t.total_iters = 70000;
  CHECK(t.lr_at(0) == 2e-4);
  CHECK(t.lr_at(29999) == 2e-4);
  CHECK(t.lr_at(30000) == doctest::Approx(2e-5).epsilon(1e-15));
  CHECK(t.sigma_at(0) == 0.1);
  CHECK(t.sigma_at(70000) == 0.0);
  CHECK(t.sigma_at(35000) == doctest::Approx(0.05).epsilon(1e-15));
  t.instance_noise.anneal_to_iter = 1000;
  CHECK(t.sigma_at(1000) == 0.0);
  CHECK(t.sigma_at(5000) == 0.0);
  CHECK(t.sigma_at(500) == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("run config text round trip and errors") {
  RunConfig c = tiny_config(losses::Variant::DFM, false);
  c.training.class_sampling.mode = SamplingMode::Subset;
  c.training.class_sampling.classes_per_iter = 4;
  c.training.instance_noise.anneal_to_iter = 77;
  c.variant.lambda_denoise = 0.125;
  const std::string text = c.to_text();
  const RunConfig back = RunConfig::parse(text);
  CHECK(back.to_text() == text);
  CHECK(back.variant.variant == losses::Variant::DFM);
  CHECK(back.training.instance_noise.anneal_to_iter == 77u);
  for (const auto& k : RunConfig::keys()) CHECK(back.get(k) == c.get(k));

  const auto parsed = RunConfig::parse("# comment\nlr0 = 0.001   # trailing\n\nbatch=10\n");
  CHECK(parsed.training.lr0 == 0.001);
  CHECK(parsed.training.batch == 10);

  try {
    RunConfig::parse("batch = 10\nno_such_key = 3\n", "x.conf");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("x.conf:2") != std::string::npos);
    CHECK(msg.find("no_such_key") != std::string::npos);
  }
  CHECK_THROWS_AS(RunConfig::parse("batch = ten\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("variant = wgan\n"), ConfigError);

  RunConfig bad = tiny_config();
  bad.training.class_sampling.mode = SamplingMode::Subset;
  bad.training.class_sampling.classes_per_iter = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("loss wiring per variant and one optimizer step per player") {
  struct Expect {
    losses::Variant v;
    std::vector<std::string> d, g;
    bool r;
  };
  const std::vector<Expect> cases = {
      {losses::Variant::Baseline, {"d_cat"}, {"g_cat"}, false},
      {losses::Variant::EB, {"d_cat", "d_eb"}, {"g_cat", "g_eb"}, false},
      {losses::Variant::AE, {"d_cat", "recon_real"}, {"g_cat", "g_eb"}, false},
      {losses::Variant::DFM, {"d_cat"}, {"g_cat", "feature"}, true},
  };
  for (const auto& e : cases) {
    CAPTURE(losses::to_string(e.v));
    const RunConfig c = tiny_config(e.v, false);
    const auto ds = tiny_data(c);
    Trainer<double> tr(c, ds);
    CHECK((tr.denoiser() != nullptr) == e.r);
    for (std::size_t i = 1; i <= 3; ++i) {
      const auto rec = tr.step();
      CHECK(rec.iter == i);
      CHECK(rec.d_terms == e.d);
      CHECK(rec.g_terms == e.g);
      CHECK(rec.r_loss.has_value() == e.r);
      CHECK(std::isfinite(rec.d_loss));
      CHECK(std::isfinite(rec.g_loss));
      CHECK(tr.counters().d_steps == i);
      CHECK(tr.counters().g_steps == i);
      CHECK(tr.counters().r_steps == (e.r ? i : 0));
    }
  }
}

TEST_CASE("IQ pooling keeps discriminator inputs at train_size") {
  for (bool iq : {true, false}) {
    const RunConfig c = tiny_config(losses::Variant::AE, iq);
    const auto ds = tiny_data(c);
    Trainer<double> tr(c, ds);
    for (int i = 0; i < 2; ++i) {
      tr.step();
      const std::size_t g = iq ? 16 : 8;
      CHECK(tr.last_generator_shape() == Shape{8, 3, g, g});
      CHECK(tr.last_discriminator_shape() == Shape{8, 3, 8, 8});
    }
  }
}

TEST_CASE("seeded trainers are bit-identical; resume reproduces the next step") {
  const RunConfig c = tiny_config(losses::Variant::AE, true);
  const auto ds = tiny_data(c);
  Trainer<double> a(c, ds), b(c, ds);
  for (int i = 0; i < 3; ++i) {
    const auto ra = a.step(), rb = b.step();
    CHECK(ra.d_loss == rb.d_loss);
    CHECK(ra.g_loss == rb.g_loss);
  }
  const auto bytes = a.checkpoint().encode();
  CHECK(bytes == b.checkpoint().encode());

  const auto ck = models::Checkpoint::decode(bytes);
  CHECK(ck.encode() == bytes);

  Trainer<double> resumed(c, ds);
  resumed.restore(ck);
  CHECK(resumed.iteration() == 3);
  CHECK(resumed.checkpoint().encode() == bytes);
  for (int i = 0; i < 2; ++i) {
    const auto ra = a.step(), rr = resumed.step();
    CHECK(rr.iter == ra.iter);
    CHECK(rr.d_loss == ra.d_loss);
    CHECK(rr.g_loss == ra.g_loss);
  }
  CHECK(resumed.counters().d_steps == a.counters().d_steps);

  RunConfig other = c;
  other.variant.variant = losses::Variant::EB;
  Trainer<double> mismatch(other, ds);
  CHECK_THROWS_AS(mismatch.restore(ck), ConfigError);
}

TEST_CASE("float precision trains on the same dataset") {
  RunConfig c = tiny_config();
  c.training.precision = Precision::F32;
  const auto ds = tiny_data(c);
  Trainer<float> tr(c, ds);
  const auto rec = tr.step();
  CHECK(std::isfinite(rec.d_loss));
  CHECK(trainer::checkpoint_precision(tr.checkpoint()) == Precision::F32);
}

TEST_CASE("non-finite values abort with the iteration index") {
  RunConfig c = tiny_config(losses::Variant::Baseline, false);
  c.training.lr0 = 1e300;
  const auto ds = tiny_data(c);
  Trainer<double> tr(c, ds);
  bool thrown = false;
  for (int i = 0; i < 5 && !thrown; ++i) {
    const std::string expect = "iteration " + std::to_string(tr.iteration() + 1) + ": ";
    try {
      tr.step();
    } catch (const NumericError& e) {
      thrown = true;
      CHECK(std::string(e.what()).rfind(expect, 0) == 0);
    }
  }
  CHECK(thrown);
}

TEST_CASE("run writes periodic checkpoints, a log, and resumes") {
  RunConfig c = tiny_config();
  c.training.checkpoint_every = 2;
  const auto ds = tiny_data(c);
  const auto dir = scratch_dir("run");
  RunOptions opts;
  opts.out_dir = dir;
  const auto res = run_any(c, ds, opts);
  CHECK(res.iterations == 10);
  CHECK(res.checkpoints.size() == 5);
  CHECK(fs::exists(dir / "final.agck"));
  CHECK(fs::exists(dir / "config.resolved.conf"));
  CHECK(fs::exists(dir / "samples_000010.png"));
  CHECK(RunConfig::load(dir / "config.resolved.conf").to_text() == c.to_text());

  const std::string log = slurp(dir / "log.ndjson");
  CHECK(std::count(log.begin(), log.end(), '\n') == 10);

  // Resume from iteration 6 into a fresh directory: the tail of the log must match.
  const auto dir2 = scratch_dir("resume");
  RunOptions ropts;
  ropts.out_dir = dir2;
  ropts.resume = dir / "ckpt_000006.agck";
  const auto res2 = run_any(c, ds, ropts);
  CHECK(res2.iterations == 10);
  CHECK(slurp(dir2 / "final.agck") == slurp(dir / "final.agck"));
  std::vector<std::string> lines, lines2;
  {
    std::ifstream a(dir / "log.ndjson"), b(dir2 / "log.ndjson");
    for (std::string s; std::getline(a, s);) lines.push_back(s);
    for (std::string s; std::getline(b, s);) lines2.push_back(s);
  }
  REQUIRE(lines2.size() == 4);
  CHECK(std::equal(lines2.begin(), lines2.end(), lines.end() - 4));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("dataset loading errors are configuration errors") {
  RunConfig c = tiny_config();
  c.data.source = "cifar10";
  c.data.path = "/nonexistent/artgan/cifar";
  CHECK_THROWS_AS(load_dataset(c), ConfigError);
  c.data.source = "png_dir";
  CHECK_THROWS_AS(load_dataset(c), ConfigError);

  RunConfig wrong = tiny_config();
  wrong.model.train_size = 16;
  const auto ds = tiny_data(tiny_config());
  CHECK_THROWS_AS(Trainer<double>(wrong, ds), ConfigError);
}
