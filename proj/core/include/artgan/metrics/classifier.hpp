#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "artgan/data/dataset.hpp"
#include "artgan/metrics/score.hpp"
#include "artgan/models/networks.hpp"

namespace artgan::metrics {

using models::TensorList;
using nd::Tensor;

struct ClassifierConfig {
  std::size_t width = 16;
  std::size_t epochs = 6;
  std::size_t batch = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

/// Small convnet standing in for the Inception network:
/// {3x3 conv -> leaky ReLU -> overlapped average pool} x 2 -> linear to K.
/// No batch norm, so posteriors are a pure function of each image.
class EvalClassifier {
 public:
  EvalClassifier() = default;
  EvalClassifier(std::size_t channels, std::size_t size, std::size_t num_classes, std::size_t width, Rng& rng);

  /// Adam on the train split; one shuffled pass per epoch. Throws
  /// ConfigError if any class has fewer than 10 training samples.
  static EvalClassifier train(const data::Dataset& ds, const ClassifierConfig& cfg,
                              const std::function<void(std::size_t epoch, double loss)>& on_epoch = {});

  /// N x K row-major posteriors for N x C x S x S images in [-1, 1].
  std::vector<double> posteriors(const Tensor<double>& images) const;
  /// Held-out argmax accuracy on `split`.
  double accuracy(const data::Dataset& ds, data::Split split) const;

  std::size_t num_classes() const { return num_classes_; }
  std::size_t image_size() const { return size_; }
  std::size_t channels() const { return channels_; }

  void save(const std::filesystem::path& path) const;
  static EvalClassifier load(const std::filesystem::path& path);

 private:
  nd::Var<double> logits(nd::Graph<double>& g, nd::Var<double> x, bool trainable);
  TensorList<double> parameters();

  std::size_t channels_ = 0, size_ = 0, num_classes_ = 0, width_ = 0;
  models::Conv2d<double> c1_, c2_;
  models::Linear<double> head_;
};

/// Class-balanced generation: `per_class` samples of each class with
/// z ~ U(-1, 1), labels cycling 0..K-1 so any contiguous chunk whose length
/// is a multiple of K is itself balanced.
template <typename T>
struct GeneratedSet {
  Tensor<T> images;
  std::vector<int> labels;
};

template <typename T>
GeneratedSet<T> generate_balanced(models::Generator<T>& G, std::size_t per_class, Rng& rng, bool full_res = false);

struct Evaluation {
  ScoreReport report;
  double fidelity = 0.0;
};

/// Scores class-balanced samples of G with `cls` and measures how often the
/// classifier agrees with the conditioning label.
template <typename T>
Evaluation evaluate_generator(models::Generator<T>& G, const EvalClassifier& cls, std::size_t per_class,
                              std::size_t splits, Rng& rng);

}  // namespace artgan::metrics
