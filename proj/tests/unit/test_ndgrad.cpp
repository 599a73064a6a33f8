#include <doctest.h>

#include <cmath>
#include <set>

#include "artgan/errors.hpp"
#include "artgan/ndgrad/gradcheck.hpp"
#include "artgan/ndgrad/ops.hpp"
#include "artgan/rng.hpp"
#include "oracles.hpp"

using namespace artgan;
using namespace artgan::nd;

namespace {

Tensor<double> random_tensor(Rng& rng, Shape s) {
  Tensor<double> t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("tensor invariants") {
  Tensor<double> t(Shape{2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK_FALSE(t.has_grad());
  t.enable_grad();
  CHECK(t.grad().size() == t.size());
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 2}, std::vector<double>(3)), DimensionError);
  CHECK_THROWS_AS(t.reshape({4}), DimensionError);
  t[0] = std::nan("");
  CHECK_THROWS_AS(t.check_finite("t"), NumericError);
}

TEST_CASE("conv2d examples") {
  Graph<double> g;
  auto x = g.constant(Tensor<double>(Shape{1, 1, 3, 3}, 1.0));
  auto w = g.constant(Tensor<double>(Shape{1, 1, 3, 3}, 1.0));
  auto b = g.constant(Tensor<double>(Shape{1}, 0.0));
  auto y = conv2d(x, w, b, 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.value()[0] == 9.0);

  auto x2 = g.constant(Tensor<double>(Shape{1, 1, 2, 2}, {1, 2, 3, 4}));
  auto id = g.constant(Tensor<double>(Shape{1, 1, 1, 1}, 1.0));
  auto y2 = conv2d(x2, id, Var<double>(), 1, 0);
  CHECK(y2.value().vector() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("conv2d errors") {
  Graph<double> g;
  auto x = g.constant(Tensor<double>(Shape{1, 2, 4, 4}));
  CHECK_THROWS_AS(conv2d(x, g.constant(Tensor<double>(Shape{1, 3, 3, 3})), Var<double>(), 1, 1), DimensionError);
  // (4 + 2 - 3) / 2 is not integral.
  CHECK_THROWS_AS(conv2d(x, g.constant(Tensor<double>(Shape{1, 2, 3, 3})), Var<double>(), 2, 1), ConfigError);
}

TEST_CASE("conv2d matches naive oracle on random inputs") {
  Rng rng(11);
  for (int stride : {1, 2}) {
    Graph<double> g;
    auto xt = random_tensor(rng, {2, 3, 8, 8});
    auto wt = random_tensor(rng, {4, 3, 4, 4});
    auto bt = random_tensor(rng, {4});
    auto y = conv2d(g.constant(xt), g.constant(wt), g.constant(bt), stride, 1);
    int Ho = 0, Wo = 0;
    auto ref = oracle::conv2d(xt.vector(), 2, 3, 8, 8, wt.vector(), 4, 4, 4, bt.vector(), stride, 1, Ho, Wo);
    REQUIRE(y.value().size() == ref.size());
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(ref[i] - y.value()[i]));
    CHECK(err <= 1e-12);
  }
}

TEST_CASE("upsample_nn2x") {
  Graph<double> g;
  auto x = g.input(Tensor<double>(Shape{1, 1, 2, 2}, {1, 2, 3, 4}));
  auto y = upsample_nn2x(x);
  REQUIRE(y.shape() == Shape{1, 1, 4, 4});
  const std::vector<double> expect = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(y.value().vector() == expect);

  auto c = upsample_nn2x(g.constant(Tensor<double>(Shape{1, 2, 3, 3}, 0.7)));
  for (auto v : c.value().data()) CHECK(v == 0.7);

  g.backward(sum(y));
  for (auto d : g.grad(x)) CHECK(d == 4.0);
}

TEST_CASE("avgpool_overlap examples") {
  Graph<double> g;
  auto y = avgpool_overlap(g.constant(Tensor<double>(Shape{1, 1, 2, 2}, {1, 2, 3, 4})));
  REQUIRE(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.value()[0] == 2.5);

  auto c = avgpool_overlap(g.constant(Tensor<double>(Shape{2, 3, 8, 6}, -0.3)));
  for (auto v : c.value().data()) CHECK(v == -0.3);

  std::vector<double> ramp(16);
  for (int i = 0; i < 16; ++i) ramp[i] = i;
  auto r = avgpool_overlap(g.constant(Tensor<double>(Shape{1, 1, 4, 4}, ramp)));
  auto ref = oracle::avgpool_overlap(ramp, 1, 1, 4, 4);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(ref[i] - r.value()[i]) <= 1e-12);

  CHECK_THROWS_AS(avgpool_overlap(g.constant(Tensor<double>(Shape{1, 1, 3, 4}))), ConfigError);
}

TEST_CASE("avgpool_overlap is linear") {
  Rng rng(5);
  Graph<double> g;
  auto x = random_tensor(rng, {2, 2, 6, 8});
  auto y = random_tensor(rng, {2, 2, 6, 8});
  const double a = 0.37, b = -1.9;
  auto lhs = avgpool_overlap(add(scale(g.constant(x), a), scale(g.constant(y), b)));
  auto px = avgpool_overlap(g.constant(x));
  auto py = avgpool_overlap(g.constant(y));
  for (std::size_t i = 0; i < lhs.value().size(); ++i) {
    CHECK(std::abs(lhs.value()[i] - (a * px.value()[i] + b * py.value()[i])) <= 1e-12);
  }
}

TEST_CASE("batchnorm") {
  Rng rng(3);
  Graph<double> g;
  Tensor<double> xt(Shape{4, 2, 3, 3});
  for (auto& v : xt.data()) v = 5.0 + 3.0 * rng.normal();
  auto x = g.constant(xt);
  auto gamma = g.constant(Tensor<double>(Shape{2}, 1.0));
  auto beta = g.constant(Tensor<double>(Shape{2}, 0.0));
  BatchNormState<double> state(2);
  auto y = batchnorm<double>(x, gamma, beta, &state, BnMode::Train);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 9; ++i) m += y.value()[(n * 2 + c) * 9 + i];
    m /= 36;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 9; ++i) v += std::pow(y.value()[(n * 2 + c) * 9 + i] - m, 2);
    v /= 36;
    CHECK(std::abs(m) < 1e-6);
    CHECK(std::abs(v - 1.0) < 1e-4);  // eps=1e-5 shrinks the variance slightly
  }
  // Running statistics moved 10% toward the batch mean.
  CHECK(state.running_mean[0] > 0.3);

  auto zero = g.constant(Tensor<double>(Shape{2}, 0.0));
  auto b2 = g.constant(Tensor<double>(Shape{2}, {0.25, -0.5}));
  auto z = batchnorm<double>(x, zero, b2, nullptr, BnMode::Train);
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < 9; ++i) CHECK(z.value()[(n * 2 + c) * 9 + i] == b2.value()[c]);

  auto single = g.constant(Tensor<double>(Shape{1, 2, 3, 3}, 1.0));
  CHECK_THROWS_AS(batchnorm<double>(single, gamma, beta, nullptr, BnMode::Train), ConfigError);
  CHECK_THROWS_AS(batchnorm<double>(single, gamma, beta, nullptr, BnMode::Eval), ConfigError);
  CHECK_NOTHROW(batchnorm<double>(single, gamma, beta, &state, BnMode::Eval));
}

TEST_CASE("elementwise examples") {
  Graph<double> g;
  CHECK(leaky_relu<double>(g.constant(Tensor<double>(Shape{1}, -1.0)), 0.2).value()[0] == doctest::Approx(-0.2));
  CHECK(tanh(g.constant(Tensor<double>(Shape{1}, 0.0))).value()[0] == 0.0);
  CHECK_THROWS_AS(add(g.constant(Tensor<double>(Shape{2})), g.constant(Tensor<double>(Shape{3}))), DimensionError);
}

TEST_CASE("backward basics") {
  Graph<double> g;
  auto x = g.input(Tensor<double>(Shape{3}, {1.0, -2.0, 0.5}));
  g.backward(sum(x), /*retain=*/true);
  for (auto d : g.grad(x)) CHECK(d == 1.0);

  Graph<double> h;
  auto y = h.input(Tensor<double>(Shape{3}, {1.0, -2.0, 0.5}));
  h.backward(sum(mul(y, y)));
  CHECK(h.grad(y)[0] == 2.0);
  CHECK(h.grad(y)[1] == -4.0);
  CHECK(h.grad(y)[2] == 1.0);
  CHECK(h.freed());
  CHECK_THROWS_AS(h.backward(Var<double>(&h, 0)), ConfigError);

  Graph<double> k;
  CHECK_THROWS_AS(k.backward(k.input(Tensor<double>(Shape{2}))), DimensionError);
}

TEST_CASE("parameter gradients accumulate across passes") {
  Tensor<double> p(Shape{2}, std::vector<double>{1.0, 3.0});
  for (int pass = 0; pass < 2; ++pass) {
    Graph<double> g;
    g.backward(sum(square(g.parameter(p))));
  }
  CHECK(p.grad()[0] == 4.0);
  CHECK(p.grad()[1] == 12.0);
}

TEST_CASE("non-finite forward values are rejected") {
  Graph<double> g;
  auto x = g.constant(Tensor<double>(Shape{1}, 1e308));
  CHECK_THROWS_AS(scale(x, 10.0), NumericError);
}

TEST_CASE("backward is bit-deterministic") {
  auto run = [] {
    Rng rng(99);
    Tensor<double> w = random_tensor(rng, {3, 2, 3, 3});
    Graph<double> g;
    auto x = g.constant(random_tensor(rng, {2, 2, 6, 6}));
    auto y = avgpool_overlap(leaky_relu<double>(conv2d(x, g.parameter(w), Var<double>(), 1, 1), 0.2));
    g.backward(sum(square(y)));
    return std::vector<double>(w.grad().begin(), w.grad().end());
  };
  CHECK(run() == run());
}

TEST_CASE("finite-difference suite passes and covers every op") {
  std::set<std::string> covered;
  for (const auto& c : standard_suite()) {
    auto r = check_gradients(c);
    INFO(c.name << " max rel err " << r.max_rel_error);
    CHECK(r.passed);
    covered.insert(c.ops.begin(), c.ops.end());
  }
  for (const auto& op : registered_ops()) {
    INFO(op);
    CHECK(covered.count(op) == 1);
  }
}

TEST_CASE("finite-difference check flags a corrupted backward") {
  GradCheckCase bad{"corrupted square", {"custom"}, {Tensor<double>(Shape{3}, {0.3, -0.7, 1.1})},
                    [](Graph<double>& g, const std::vector<Var<double>>& v) {
                      Tensor<double> out(v[0].shape());
                      for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[0].value()[i] * v[0].value()[i];
                      const auto xid = v[0].id();
                      return g.record("bad_square", std::move(out), {v[0]}, [xid](Graph<double>& gr, std::size_t self) {
                        auto dy = gr.grad_buffer(self);
                        auto dx = gr.grad_buffer(xid);
                        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += 3.0 * gr.value(xid)[i] * dy[i];
                      });
                    }};
  CHECK_FALSE(check_gradients(bad).passed);
}
