#include <benchmark/benchmark.h>

#include "artgan/ndgrad/ops.hpp"
#include "artgan/trainer/trainer.hpp"

using namespace artgan;
using nd::Graph;
using nd::Shape;
using nd::Tensor;

namespace {

Tensor<double> random_tensor(Shape s, Rng& rng) {
  Tensor<double> t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Args: batch, channels in, spatial size, channels out, stride.
void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto n = std::size_t(state.range(0)), cin = std::size_t(state.range(1)), hw = std::size_t(state.range(2)),
             cout = std::size_t(state.range(3)), stride = std::size_t(state.range(4));
  Rng rng(1);
  auto x = random_tensor(Shape{n, cin, hw, hw}, rng);
  const std::size_t k = stride == 2 ? 4 : 3;
  auto w = random_tensor(Shape{cout, cin, k, k}, rng);
  auto b = random_tensor(Shape{cout}, rng);
  for (auto _ : state) {
    Graph<double> g;
    w.zero_grad();
    b.zero_grad();
    auto y = nd::conv2d(g.parameter(x), g.parameter(w), g.parameter(b), stride, 1);
    g.backward(nd::sum(y));
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({64, 3, 32, 32, 1})->Args({64, 16, 16, 32, 2})->Args({64, 32, 8, 64, 2});

void BM_AvgPoolOverlap(benchmark::State& state) {
  const auto n = std::size_t(state.range(0)), hw = std::size_t(state.range(1));
  Rng rng(2);
  auto x = random_tensor(Shape{n, 3, hw, hw}, rng);
  for (auto _ : state) {
    Graph<double> g;
    x.zero_grad();
    auto y = nd::avgpool_overlap(g.parameter(x));
    g.backward(nd::sum(y));
    benchmark::DoNotOptimize(x.grad().data());
  }
}
BENCHMARK(BM_AvgPoolOverlap)->Args({64, 32})->Args({64, 64});

// One full adversarial iteration of the toy AE + IQ configuration.
void BM_TrainIteration(benchmark::State& state) {
  trainer::RunConfig c;
  c.variant.variant = losses::Variant::AE;
  c.variant.iq = true;
  c.model.train_size = 16;
  c.model.g_base = 32;
  c.model.d_base = 16;
  c.model.denoiser_hidden = 64;
  c.training.batch = 64;
  c.training.precision = state.range(0) ? trainer::Precision::F64 : trainer::Precision::F32;
  c.data.toy_size = 16;
  const auto ds = trainer::load_dataset(c);
  if (state.range(0)) {
    trainer::Trainer<double> tr(c, ds);
    for (auto _ : state) benchmark::DoNotOptimize(tr.step().g_loss);
  } else {
    trainer::Trainer<float> tr(c, ds);
    for (auto _ : state) benchmark::DoNotOptimize(tr.step().g_loss);
  }
}
BENCHMARK(BM_TrainIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
