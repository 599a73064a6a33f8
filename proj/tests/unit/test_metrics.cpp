#include <doctest.h>

#include <cmath>
#include <vector>

#include "artgan/errors.hpp"
#include "artgan/metrics/classifier.hpp"
#include "artgan/metrics/score.hpp"

using namespace artgan;
using namespace artgan::metrics;

namespace {

std::vector<double> random_posteriors(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<double> p(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += p[i * k + c] = std::exp(rng.uniform(-4.0, 4.0));
    for (std::size_t c = 0; c < k; ++c) p[i * k + c] /= sum;
  }
  return p;
}

}  // namespace

TEST_CASE("entropy examples") {
  CHECK(entropy(std::vector<double>{0.0, 1.0, 0.0}) == 0.0);
  CHECK(std::abs(entropy(std::vector<double>(7, 1.0 / 7)) - std::log(7.0)) < 1e-12);
  CHECK(std::abs(entropy(std::vector<double>{0.5, 0.25, 0.25}) - 1.0397207708399179) < 1e-12);
}

TEST_CASE("split score degenerate cases") {
  const std::size_t k = 5, n = 50;
  const std::vector<double> uniform(n * k, 1.0 / k);
  const auto u = split_score(uniform, k, 10);
  CHECK(std::abs(u.objectness - 5.0) < 1e-9);
  CHECK(std::abs(u.class_diversity - 5.0) < 1e-9);
  CHECK(std::abs(u.score - 1.0) < 1e-9);

  std::vector<double> onehot(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) onehot[i * k + i % k] = 1.0;
  const auto o = split_score(onehot, k, 10);
  CHECK(o.objectness == 1.0);
  CHECK(std::abs(o.class_diversity - 5.0) < 1e-9);
  CHECK(std::abs(o.score - 5.0) < 1e-9);
  CHECK(std::abs(o.score_splits.mean - 5.0) < 1e-9);
  CHECK(o.score_splits.std < 1e-9);
}

TEST_CASE("split score invariants on random posteriors") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.below(12), n = 20 + rng.below(80);
    const auto p = random_posteriors(rng, n, k);
    const auto r = split_score(p, k, 1 + rng.below(10));
    CHECK(std::abs(r.score - r.class_diversity / r.objectness) <= 1e-9);
    CHECK(r.objectness >= 1.0 - 1e-12);
    CHECK(r.objectness <= double(k) + 1e-9);
    CHECK(r.class_diversity >= 1.0 - 1e-12);
    CHECK(r.class_diversity <= double(k) + 1e-9);

    // Closed KL form of the same quantity.
    std::vector<double> marginal(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c) marginal[c] += p[i * k + c] / double(n);
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < k; ++c) kl += p[i * k + c] * std::log(p[i * k + c] / marginal[c]) / double(n);
    CHECK(std::abs(r.score - std::exp(kl)) < 1e-9);

    auto doubled = p;
    doubled.insert(doubled.end(), p.begin(), p.end());
    const auto a = split_score(p, k, 1), b = split_score(doubled, k, 1);
    CHECK(std::abs(a.objectness - b.objectness) < 1e-9);
    CHECK(std::abs(a.class_diversity - b.class_diversity) < 1e-9);
    CHECK(std::abs(a.score - b.score) < 1e-9);
  }
}

TEST_CASE("split score errors") {
  const std::vector<double> p{0.5, 0.5, 0.2, 0.2};
  CHECK_THROWS_AS(split_score(p, 2, 1), DimensionError);
  const std::vector<double> ok{0.5, 0.5, 0.3, 0.7};
  CHECK_THROWS_AS(split_score(ok, 2, 3), ConfigError);
  CHECK_THROWS_AS(split_score(ok, 2, 0), ConfigError);
  CHECK_THROWS_AS(split_score(ok, 3, 1), DimensionError);
}

TEST_CASE("reported objectness and diversity reproduce reported scores") {
  struct Row {
    double objectness, diversity, score, std;
  };
  // CIFAR-10 rows, then the real-data row.
  const std::vector<Row> cifar{{33.24, 272.90, 8.21, 0.08}, {33.51, 276.60, 8.26, 0.10}, {31.09, 262.04, 8.43, 0.09},
                               {33.34, 274.99, 8.25, 0.09}, {30.19, 256.62, 8.50, 0.06}, {33.30, 276.15, 8.29, 0.10},
                               {30.07, 256.42, 8.53, 0.09}, {30.65, 269.83, 8.81, 0.14}, {24.32, 271.76, 11.24, 0.12}};
  const std::vector<Row> stl{{31.03, 301.63, 9.72, 0.14}, {30.22, 293.89, 9.73, 0.12}, {31.04, 299.50, 9.65, 0.08},
                             {31.25, 300.89, 9.63, 0.09}, {29.05, 293.90, 10.12, 0.09}, {31.03, 306.39, 9.87, 0.09},
                             {28.18, 283.81, 10.07, 0.09}, {15.04, 232.17, 15.48, 0.76}};
  for (const auto* table : {&cifar, &stl})
    for (const auto& r : *table) CHECK(std::abs(r.diversity / r.objectness - r.score) <= r.std);
  CHECK(std::abs(272.90 / 33.24 - 8.21) < 0.005);
  CHECK(std::abs(276.60 / 33.51 - 8.254) < 0.0005);
}

TEST_CASE("conditional fidelity") {
  const std::vector<double> p{0.9, 0.1, 0.2, 0.8, 0.6, 0.4};
  CHECK(conditional_fidelity(p, 2, {0, 1, 1}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(conditional_fidelity(p, 2, {0}), DimensionError);
}

TEST_CASE("evaluation classifier on toy shapes") {
  const auto ds = data::make_toy_shapes(4, 500, 16, 7);
  ClassifierConfig cfg;
  const auto cls = EvalClassifier::train(ds, cfg);
  const double acc = cls.accuracy(ds, data::Split::Test);
  MESSAGE("held-out accuracy " << acc);
  CHECK(acc >= 0.95);

  const std::vector<std::size_t> idx{0, 1, 2, 3, 4};
  const auto post = cls.posteriors(ds.images<double>(idx));
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += post[i * 4 + c];
    CHECK(std::abs(s - 1.0) < 1e-12);
  }

  // Same seed, same weights.
  const auto small = data::make_toy_shapes(4, 20, 16, 1);
  ClassifierConfig quick;
  quick.epochs = 1;
  const auto a = EvalClassifier::train(small, quick), b = EvalClassifier::train(small, quick);
  CHECK(a.posteriors(small.images<double>(idx)) == b.posteriors(small.images<double>(idx)));

  CHECK_THROWS_AS(EvalClassifier::train(data::make_toy_shapes(4, 10, 16, 1), quick), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "artgan_test_cls.agck";
  cls.save(path);
  const auto back = EvalClassifier::load(path);
  CHECK(back.posteriors(ds.images<double>(idx)) == post);
  std::filesystem::remove(path);
}

TEST_CASE("balanced generation layout") {
  models::ModelConfig m;
  m.train_size = 16;
  m.num_classes = 4;
  m.g_base = 16;
  m.z_dim = 8;
  Rng rng(3);
  models::Generator<double> G(m, rng);
  const auto set = generate_balanced(G, 5, rng);
  CHECK(set.images.shape() == nd::Shape{20, 3, 16, 16});
  REQUIRE(set.labels.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(set.labels[i] == int(i % 4));
}
