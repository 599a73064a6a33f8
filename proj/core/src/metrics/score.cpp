#include "artgan/metrics/score.hpp"

#include <cmath>

#include "artgan/errors.hpp"

namespace artgan::metrics {

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

namespace {

struct Parts {
  double objectness, diversity;
};

Parts score_rows(std::span<const double> rows, std::size_t k) {
  const std::size_t n = rows.size() / k;
  std::vector<double> marginal(k, 0.0);
  double mean_h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = rows.subspan(i * k, k);
    mean_h += entropy(row);
    for (std::size_t c = 0; c < k; ++c) marginal[c] += row[c];
  }
  mean_h /= double(n);
  for (auto& m : marginal) m /= double(n);
  return {std::exp(mean_h), std::exp(entropy(marginal))};
}

SplitStats stats(const std::vector<double>& v) {
  SplitStats s;
  for (double x : v) s.mean += x;
  s.mean /= double(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / double(v.size()));
  return s;
}

}  // namespace

ScoreReport split_score(std::span<const double> posteriors, std::size_t num_classes, std::size_t splits) {
  if (num_classes == 0 || posteriors.size() % num_classes != 0)
    throw DimensionError("split_score: posterior buffer is not N x " + std::to_string(num_classes));
  const std::size_t n = posteriors.size() / num_classes;
  if (splits == 0 || splits > n)
    throw ConfigError("split_score: need 1 <= splits <= N, got splits=" + std::to_string(splits) +
                      " N=" + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double p = posteriors[i * num_classes + c];
      if (!(p >= 0.0 && p <= 1.0)) throw DimensionError("split_score: row " + std::to_string(i) + " is not a simplex");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw DimensionError("split_score: row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }

  ScoreReport r;
  r.n_samples = n;
  r.num_classes = num_classes;
  r.splits = splits;
  const auto all = score_rows(posteriors, num_classes);
  r.objectness = all.objectness;
  r.class_diversity = all.diversity;
  r.score = all.diversity / all.objectness;

  const std::size_t part = n / splits;
  std::vector<double> obj, div, sc;
  for (std::size_t s = 0; s < splits; ++s) {
    const auto p = score_rows(posteriors.subspan(s * part * num_classes, part * num_classes), num_classes);
    obj.push_back(p.objectness);
    div.push_back(p.diversity);
    sc.push_back(p.diversity / p.objectness);
  }
  r.objectness_splits = stats(obj);
  r.diversity_splits = stats(div);
  r.score_splits = stats(sc);
  return r;
}

void to_json(nlohmann::json& j, const ScoreReport& r) {
  auto st = [](const SplitStats& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
  j = nlohmann::json{{"objectness", r.objectness},
                     {"diversity", r.class_diversity},
                     {"score", r.score},
                     {"n_samples", r.n_samples},
                     {"num_classes", r.num_classes},
                     {"splits", r.splits},
                     {"objectness_splits", st(r.objectness_splits)},
                     {"diversity_splits", st(r.diversity_splits)},
                     {"score_splits", st(r.score_splits)}};
}

double conditional_fidelity(std::span<const double> posteriors, std::size_t num_classes,
                            const std::vector<int>& labels) {
  if (posteriors.size() != labels.size() * num_classes)
    throw DimensionError("conditional_fidelity: posteriors do not match labels");
  if (labels.empty()) throw ConfigError("conditional_fidelity: no samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = posteriors.subspan(i * num_classes, num_classes);
    std::size_t best = 0;
    for (std::size_t c = 1; c < num_classes; ++c)
      if (row[c] > row[best]) best = c;
    hits += int(best) == labels[i];
  }
  return double(hits) / double(labels.size());
}

}  // namespace artgan::metrics
