#include "artgan/metrics/classifier.hpp"

#include <cmath>

#include "artgan/errors.hpp"
#include "artgan/models/checkpoint.hpp"
#include "artgan/models/heads.hpp"
#include "artgan/trainer/adam.hpp"

namespace artgan::metrics {

using namespace artgan::nd;

EvalClassifier::EvalClassifier(std::size_t channels, std::size_t size, std::size_t num_classes, std::size_t width,
                               Rng& rng)
    : channels_(channels), size_(size), num_classes_(num_classes), width_(width) {
  if (size < 4 || size % 4 != 0) throw ConfigError("classifier: image size must be a positive multiple of 4");
  if (num_classes < 2) throw ConfigError("classifier: need at least two classes");
  const double std1 = std::sqrt(2.0 / double(channels * 9));
  const double std2 = std::sqrt(2.0 / double(width * 9));
  c1_ = models::Conv2d<double>(channels, width, 3, 1, 1, true, std1, rng);
  c2_ = models::Conv2d<double>(width, 2 * width, 3, 1, 1, true, std2, rng);
  const std::size_t flat = 2 * width * (size / 4) * (size / 4);
  head_ = models::Linear<double>(flat, num_classes, std::sqrt(1.0 / double(flat)), rng);
}

TensorList<double> EvalClassifier::parameters() {
  TensorList<double> out;
  c1_.collect("c1", out);
  c2_.collect("c2", out);
  head_.collect("head", out);
  return out;
}

Var<double> EvalClassifier::logits(Graph<double>& g, Var<double> x, bool trainable) {
  if (x.shape().size() != 4 || x.shape()[1] != channels_ || x.shape()[2] != size_ || x.shape()[3] != size_)
    throw DimensionError("classifier: expected N x " + std::to_string(channels_) + " x " + std::to_string(size_) +
                         " x " + std::to_string(size_) + ", got " + nd::to_string(x.shape()));
  auto h = avgpool_overlap(leaky_relu(c1_(g, x, trainable), 0.2));
  h = avgpool_overlap(leaky_relu(c2_(g, h, trainable), 0.2));
  const std::size_t n = x.shape()[0];
  h = reshape(h, {n, h.value().size() / n});
  return head_(g, h, trainable);
}

EvalClassifier EvalClassifier::train(const data::Dataset& ds, const ClassifierConfig& cfg,
                                     const std::function<void(std::size_t, double)>& on_epoch) {
  ds.validate();
  if (ds.height != ds.width) throw ConfigError("classifier: images must be square");
  for (const auto& cls : ds.by_class(data::Split::Train))
    if (cls.size() < 10) throw ConfigError("classifier: every class needs at least 10 training samples");

  Rng rng(cfg.seed);
  EvalClassifier c(ds.channels, ds.height, ds.num_classes(), cfg.width, rng);
  auto params = c.parameters();
  trainer::AdamState<double> adam(params);
  const trainer::AdamHyper hyper{0.9, 0.999, 1e-8};

  auto order = ds.indices(data::Split::Train);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      for (auto& [name, t] : params) t->zero_grad();
      Graph<double> g;
      auto l = c.logits(g, g.constant(ds.images<double>(idx)), true);
      auto onehot = g.constant(models::one_hot<double>(ds.labels_at(idx), ds.num_classes()));
      auto loss = mean(sub(logsumexp_rows(l), sum_rows(mul(l, onehot))));
      total += loss.value()[0];
      ++batches;
      g.backward(loss);
      trainer::adam_step(params, adam, cfg.lr, hyper);
    }
    if (on_epoch) on_epoch(epoch, total / double(batches));
  }
  return c;
}

std::vector<double> EvalClassifier::posteriors(const Tensor<double>& images) const {
  auto& self = const_cast<EvalClassifier&>(*this);
  const std::size_t n = images.shape().empty() ? 0 : images.shape()[0];
  const std::size_t per = n ? images.size() / n : 0;
  std::vector<double> out;
  out.reserve(n * num_classes_);
  constexpr std::size_t chunk = 100;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    Tensor<double> part(Shape{m, images.shape()[1], images.shape()[2], images.shape()[3]});
    std::copy_n(images.data().begin() + std::ptrdiff_t(start * per), m * per, part.data().begin());
    Graph<double> g;
    const auto& l = self.logits(g, g.constant(std::move(part)), false).value();
    for (std::size_t i = 0; i < m; ++i) {
      const auto p = models::class_probs<double>(l.data().subspan(i * num_classes_, num_classes_));
      out.insert(out.end(), p.begin(), p.end());
    }
  }
  return out;
}

double EvalClassifier::accuracy(const data::Dataset& ds, data::Split split) const {
  const auto idx = ds.indices(split);
  if (idx.empty()) throw ConfigError("classifier accuracy: split is empty");
  return conditional_fidelity(posteriors(ds.images<double>(idx)), num_classes_, ds.labels_at(idx));
}

void EvalClassifier::save(const std::filesystem::path& path) const {
  models::Checkpoint ck;
  ck.config = {{"kind", "eval_classifier"},
               {"channels", channels_},
               {"size", size_},
               {"num_classes", num_classes_},
               {"width", width_}};
  ck.put_all("cls", const_cast<EvalClassifier&>(*this).parameters());
  ck.save(path);
}

EvalClassifier EvalClassifier::load(const std::filesystem::path& path) {
  const auto ck = models::Checkpoint::load(path);
  if (ck.config.value("kind", "") != "eval_classifier")
    throw ConfigError(path.string() + ": not an evaluation classifier checkpoint");
  Rng rng(0);
  EvalClassifier c(ck.config.at("channels").get<std::size_t>(), ck.config.at("size").get<std::size_t>(),
                   ck.config.at("num_classes").get<std::size_t>(), ck.config.at("width").get<std::size_t>(), rng);
  ck.get_all("cls", c.parameters());
  return c;
}

template <typename T>
GeneratedSet<T> generate_balanced(models::Generator<T>& G, std::size_t per_class, Rng& rng, bool full_res) {
  const auto& cfg = G.config();
  GeneratedSet<T> out;
  for (std::size_t i = 0; i < per_class * cfg.num_classes; ++i) out.labels.push_back(int(i % cfg.num_classes));
  Tensor<T> z(Shape{out.labels.size(), cfg.z_dim});
  for (auto& v : z.data()) v = T(rng.uniform(-1.0, 1.0));
  out.images = models::generate(G, z, out.labels, full_res);
  return out;
}

template <typename T>
Evaluation evaluate_generator(models::Generator<T>& G, const EvalClassifier& cls, std::size_t per_class,
                              std::size_t splits, Rng& rng) {
  if (G.config().num_classes != cls.num_classes())
    throw ConfigError("evaluate: generator has " + std::to_string(G.config().num_classes) +
                      " classes, classifier " + std::to_string(cls.num_classes()));
  const auto set = generate_balanced(G, per_class, rng);
  const auto post = cls.posteriors(nd::cast<double>(set.images));
  Evaluation e;
  e.report = split_score(post, cls.num_classes(), splits);
  e.fidelity = conditional_fidelity(post, cls.num_classes(), set.labels);
  return e;
}

template GeneratedSet<float> generate_balanced(models::Generator<float>&, std::size_t, Rng&, bool);
template GeneratedSet<double> generate_balanced(models::Generator<double>&, std::size_t, Rng&, bool);
template Evaluation evaluate_generator(models::Generator<float>&, const EvalClassifier&, std::size_t, std::size_t,
                                       Rng&);
template Evaluation evaluate_generator(models::Generator<double>&, const EvalClassifier&, std::size_t, std::size_t,
                                       Rng&);

}  // namespace artgan::metrics
