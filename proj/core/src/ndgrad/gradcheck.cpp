#include "artgan/ndgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "artgan/errors.hpp"
#include "artgan/ndgrad/ops.hpp"
#include "artgan/rng.hpp"

namespace artgan::nd {

namespace {

using D = double;
using Inputs = std::vector<Var<D>>;

double eval_projected(const GradCheckCase& c, const std::vector<Tensor<D>>& inputs, const Tensor<D>& proj) {
  Graph<D> g;
  Inputs vars;
  for (const auto& t : inputs) vars.push_back(g.constant(t));
  auto out = c.build(g, vars);
  double acc = 0.0;
  for (std::size_t i = 0; i < out.value().size(); ++i) acc += out.value()[i] * proj[i];
  return acc;
}

// Values bounded away from zero so kinks (leaky_relu) stay out of the
// finite-difference stencil.
Tensor<D> random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor<D> t(std::move(shape));
  for (auto& v : t.data()) {
    double x;
    do {
      x = rng.uniform(lo, hi);
    } while (lo < 0.0 && std::abs(x) < 0.05);
    v = x;
  }
  return t;
}

Tensor<D> scaled(Tensor<D> t, double s) {
  for (auto& v : t.data()) v *= s;
  return t;
}

}  // namespace

GradCheckResult check_gradients(const GradCheckCase& c, const GradCheckOptions& opts) {
  GradCheckResult res;
  res.name = c.name;

  Tensor<D> proj;
  Graph<D> g;
  Inputs vars;
  for (const auto& t : c.inputs) vars.push_back(g.input(t));
  auto out = c.build(g, vars);
  {
    Rng rng(opts.projection_seed);
    proj = Tensor<D>(out.shape());
    for (auto& v : proj.data()) v = rng.normal();
  }
  auto loss = sum(mul(out, g.constant(proj)));
  g.backward(loss, /*retain=*/true);

  std::vector<Tensor<D>> probe = c.inputs;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    auto analytic = g.grad(vars[k]);
    for (std::size_t i = 0; i < probe[k].size(); ++i) {
      const double orig = probe[k][i];
      probe[k][i] = orig + opts.eps;
      const double fp = eval_projected(c, probe, proj);
      probe[k][i] = orig - opts.eps;
      const double fm = eval_projected(c, probe, proj);
      probe[k][i] = orig;
      const double numeric = (fp - fm) / (2.0 * opts.eps);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      res.max_rel_error = std::max(res.max_rel_error, std::abs(a - numeric) / denom);
      ++res.checked;
    }
  }
  res.passed = res.max_rel_error < opts.tolerance;
  return res;
}

const std::vector<std::string>& registered_ops() {
  static const std::vector<std::string> ops = {
      "conv2d",  "upsample_nn2x", "avgpool_overlap", "batchnorm", "leaky_relu", "relu",     "tanh",
      "softplus", "square",       "sqrt",            "linear",    "add",        "sub",      "mul",
      "scale",   "add_scalar",    "concat",          "reshape",   "sum",        "mean",     "sum_rows",
      "mean_rows", "logsumexp_rows"};
  return ops;
}

std::vector<GradCheckCase> standard_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckCase> s;
  auto add_case = [&](std::string name, std::vector<std::string> ops, std::vector<Tensor<D>> in,
                      std::function<Var<D>(Graph<D>&, const Inputs&)> f) {
    s.push_back({std::move(name), std::move(ops), std::move(in), std::move(f)});
  };

  add_case("conv2d k3 s1 p1 +bias", {"conv2d"},
           {random_tensor(rng, {2, 3, 5, 5}), random_tensor(rng, {4, 3, 3, 3}), random_tensor(rng, {4})},
           [](Graph<D>&, const Inputs& v) { return conv2d(v[0], v[1], v[2], 1, 1); });
  add_case("conv2d k4 s2 p1", {"conv2d"}, {random_tensor(rng, {2, 2, 6, 6}), random_tensor(rng, {3, 2, 4, 4})},
           [](Graph<D>&, const Inputs& v) { return conv2d(v[0], v[1], Var<D>(), 2, 1); });
  add_case("upsample_nn2x", {"upsample_nn2x"}, {random_tensor(rng, {2, 2, 3, 3})},
           [](Graph<D>&, const Inputs& v) { return upsample_nn2x(v[0]); });
  add_case("avgpool_overlap", {"avgpool_overlap"}, {random_tensor(rng, {2, 2, 6, 4})},
           [](Graph<D>&, const Inputs& v) { return avgpool_overlap(v[0]); });
  add_case("batchnorm train rank4", {"batchnorm"},
           {random_tensor(rng, {3, 2, 3, 3}), random_tensor(rng, {2}, 0.5, 1.5), random_tensor(rng, {2})},
           [](Graph<D>&, const Inputs& v) { return batchnorm<D>(v[0], v[1], v[2], nullptr, BnMode::Train); });
  add_case("batchnorm train rank2", {"batchnorm"},
           {random_tensor(rng, {5, 3}), random_tensor(rng, {3}, 0.5, 1.5), random_tensor(rng, {3})},
           [](Graph<D>&, const Inputs& v) { return batchnorm<D>(v[0], v[1], v[2], nullptr, BnMode::Train); });
  {
    auto state = std::make_shared<BatchNormState<D>>(2);
    state->running_mean = random_tensor(rng, {2});
    state->running_var = random_tensor(rng, {2}, 0.5, 2.0);
    add_case("batchnorm eval", {"batchnorm"},
             {random_tensor(rng, {2, 2, 3, 3}), random_tensor(rng, {2}, 0.5, 1.5), random_tensor(rng, {2})},
             [state](Graph<D>&, const Inputs& v) { return batchnorm<D>(v[0], v[1], v[2], state.get(), BnMode::Eval); });
  }
  add_case("leaky_relu", {"leaky_relu"}, {random_tensor(rng, {4, 5})},
           [](Graph<D>&, const Inputs& v) { return leaky_relu<D>(v[0], 0.2); });
  add_case("relu", {"relu"}, {random_tensor(rng, {4, 5})}, [](Graph<D>&, const Inputs& v) { return relu(v[0]); });
  add_case("tanh", {"tanh"}, {random_tensor(rng, {4, 5}, -2.0, 2.0)},
           [](Graph<D>&, const Inputs& v) { return tanh(v[0]); });
  add_case("softplus", {"softplus"}, {random_tensor(rng, {4, 5}, -4.0, 4.0)},
           [](Graph<D>&, const Inputs& v) { return softplus(v[0]); });
  add_case("square", {"square"}, {random_tensor(rng, {4, 5})}, [](Graph<D>&, const Inputs& v) { return square(v[0]); });
  add_case("sqrt", {"sqrt"}, {random_tensor(rng, {4, 5}, 0.5, 2.0)},
           [](Graph<D>&, const Inputs& v) { return sqrt(v[0]); });
  add_case("linear", {"linear"}, {random_tensor(rng, {3, 4}), random_tensor(rng, {5, 4}), random_tensor(rng, {5})},
           [](Graph<D>&, const Inputs& v) { return linear(v[0], v[1], v[2]); });
  add_case("add/sub/mul", {"add", "sub", "mul"}, {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})},
           [](Graph<D>&, const Inputs& v) { return mul(add(v[0], v[1]), sub(v[0], v[1])); });
  add_case("scale/add_scalar", {"scale", "add_scalar"}, {random_tensor(rng, {3, 4})},
           [](Graph<D>&, const Inputs& v) { return add_scalar(scale(v[0], 1.7), -0.3); });
  add_case("concat/reshape", {"concat", "reshape"}, {random_tensor(rng, {2, 3, 2}), random_tensor(rng, {2, 1, 2})},
           [](Graph<D>&, const Inputs& v) { return reshape(concat(v[0], v[1]), {2, 8}); });
  add_case("sum/mean", {"sum", "mean"}, {random_tensor(rng, {3, 4})},
           [](Graph<D>&, const Inputs& v) { return add(sum(square(v[0])), mean(v[0])); });
  add_case("sum_rows/mean_rows", {"sum_rows", "mean_rows"}, {random_tensor(rng, {3, 2, 2})},
           [](Graph<D>&, const Inputs& v) { return mul(sum_rows(v[0]), mean_rows(square(v[0]))); });
  add_case("logsumexp_rows", {"logsumexp_rows"}, {random_tensor(rng, {4, 6}, -3.0, 3.0)},
           [](Graph<D>&, const Inputs& v) { return logsumexp_rows(v[0]); });

  // Composite 1: conv -> bn -> lrelu -> pool -> linear.
  add_case("composite: conv-bn-lrelu-pool-linear",
           {"conv2d", "batchnorm", "leaky_relu", "avgpool_overlap", "reshape", "linear"},
           {random_tensor(rng, {3, 2, 6, 6}), random_tensor(rng, {4, 2, 3, 3}), random_tensor(rng, {4}, 0.5, 1.5),
            random_tensor(rng, {4}), random_tensor(rng, {3, 36}), random_tensor(rng, {3})},
           [](Graph<D>&, const Inputs& v) {
             auto h = conv2d(v[0], v[1], Var<D>(), 1, 1);
             h = batchnorm<D>(h, v[2], v[3], nullptr, BnMode::Train);
             h = leaky_relu<D>(h, 0.2);
             h = avgpool_overlap(h);
             h = reshape(h, {3, 36});
             return linear(h, v[4], v[5]);
           });
  // Composite 2: a miniature conditional generator with the overlapped pool.
  add_case("composite: generator block",
           {"concat", "linear", "reshape", "batchnorm", "leaky_relu", "upsample_nn2x", "conv2d", "tanh",
            "avgpool_overlap"},
           {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 2}), scaled(random_tensor(rng, {8, 6}), 0.7),
            random_tensor(rng, {2, 2, 3, 3}), random_tensor(rng, {2})},
           [](Graph<D>&, const Inputs& v) {
             auto h = linear(concat(v[0], v[1]), v[2], Var<D>());
             h = reshape(h, {3, 2, 2, 2});
             auto gamma = h.graph().constant(Tensor<D>(Shape{2}, 1.0));
             auto beta = h.graph().constant(Tensor<D>(Shape{2}, 0.0));
             h = leaky_relu<D>(batchnorm<D>(h, gamma, beta, nullptr, BnMode::Train), 0.2);
             h = conv2d(upsample_nn2x(h), v[3], v[4], 1, 1);
             return avgpool_overlap(tanh(h));
           });
  // Composite 3: autoencoder discriminator with both heads feeding one loss.
  add_case("composite: autoencoder discriminator loss",
           {"conv2d", "batchnorm", "leaky_relu", "reshape", "linear", "logsumexp_rows", "softplus",
            "upsample_nn2x", "tanh", "sub", "square", "mean", "add"},
           {random_tensor(rng, {2, 2, 4, 4}), random_tensor(rng, {3, 2, 4, 4}), random_tensor(rng, {2, 12}),
            random_tensor(rng, {2}), random_tensor(rng, {2, 3, 3, 3}), random_tensor(rng, {2})},
           [](Graph<D>& g, const Inputs& v) {
             auto gamma = g.constant(Tensor<D>(Shape{3}, 1.0));
             auto beta = g.constant(Tensor<D>(Shape{3}, 0.0));
             auto enc = conv2d(v[0], v[1], Var<D>(), 2, 1);
             enc = leaky_relu<D>(batchnorm<D>(enc, gamma, beta, nullptr, BnMode::Train), 0.2);
             auto logits = linear(reshape(enc, {2, 12}), v[2], v[3]);
             auto adv = mean(softplus(logsumexp_rows(logits)));
             auto rec = tanh(conv2d(upsample_nn2x(enc), v[4], v[5], 1, 1));
             return add(adv, mean(square(sub(rec, v[0]))));
           });
  return s;
}

}  // namespace artgan::nd
