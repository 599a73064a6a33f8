#include "artgan/ndgrad/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <memory>
#include <cmath>

#include "artgan/errors.hpp"

namespace artgan::nd {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Upper bound on im2col scratch (elements) before a batch is split into chunks.
constexpr std::size_t kColBudget = std::size_t(1) << 22;

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw DimensionError(std::string(op) + ": " + what);
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  require(a == b, op, "shape mismatch " + to_string(a) + " vs " + to_string(b));
}

template <typename T>
void require_rank(const Var<T>& v, std::size_t rank, const char* op) {
  require(v.valid(), op, "missing input");
  require(v.shape().size() == rank, op,
          "expected rank " + std::to_string(rank) + ", got " + to_string(v.shape()));
}

struct ConvGeom {
  std::size_t n, cin, h, w, cout, kh, kw, stride, pad, ho, wo;
  std::size_t patch() const { return cin * kh * kw; }
  std::size_t pixels() const { return ho * wo; }
};

/// Output columns [lo, hi) whose tap at offset k lands inside [0, extent).
inline void valid_range(std::size_t out, std::size_t stride, std::size_t k, std::size_t pad, std::size_t extent,
                        std::size_t& lo, std::size_t& hi) {
  // Need o*stride + k - pad in [0, extent).
  lo = k >= pad ? 0 : (pad - k + stride - 1) / stride;
  const long last = long(extent) - 1 + long(pad) - long(k);
  hi = last < 0 ? 0 : std::min(out, std::size_t(last) / stride + 1);
  if (lo > hi) lo = hi;
}

template <typename T>
void im2col(const T* x, const ConvGeom& g, std::size_t n0, std::size_t cn, T* col) {
  const std::size_t P = g.pixels();
  const std::size_t cols = cn * P;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      std::size_t oh_lo, oh_hi;
      valid_range(g.ho, g.stride, ki, g.pad, g.h, oh_lo, oh_hi);
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        std::size_t ow_lo, ow_hi;
        valid_range(g.wo, g.stride, kj, g.pad, g.w, ow_lo, ow_hi);
        T* row = col + ((ci * g.kh + ki) * g.kw + kj) * cols;
        for (std::size_t s = 0; s < cn; ++s) {
          const T* plane = x + ((n0 + s) * g.cin + ci) * g.h * g.w;
          T* dst = row + s * P;
          std::fill(dst, dst + oh_lo * g.wo, T(0));
          for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
            T* d = dst + oh * g.wo;
            const T* src = plane + (oh * g.stride + ki - g.pad) * g.w + (ow_lo * g.stride + kj - g.pad);
            std::fill(d, d + ow_lo, T(0));
            if (g.stride == 1) {
              std::copy(src, src + (ow_hi - ow_lo), d + ow_lo);
            } else {
              for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) d[ow] = src[(ow - ow_lo) * g.stride];
            }
            std::fill(d + ow_hi, d + g.wo, T(0));
          }
          std::fill(dst + oh_hi * g.wo, dst + P, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeom& g, std::size_t n0, std::size_t cn, T* dx) {
  const std::size_t P = g.pixels();
  const std::size_t cols = cn * P;
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      std::size_t oh_lo, oh_hi;
      valid_range(g.ho, g.stride, ki, g.pad, g.h, oh_lo, oh_hi);
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        std::size_t ow_lo, ow_hi;
        valid_range(g.wo, g.stride, kj, g.pad, g.w, ow_lo, ow_hi);
        const T* row = col + ((ci * g.kh + ki) * g.kw + kj) * cols;
        for (std::size_t s = 0; s < cn; ++s) {
          T* plane = dx + ((n0 + s) * g.cin + ci) * g.h * g.w;
          const T* src = row + s * P;
          for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
            T* d = plane + (oh * g.stride + ki - g.pad) * g.w + (ow_lo * g.stride + kj - g.pad);
            const T* srow = src + oh * g.wo;
            for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) d[(ow - ow_lo) * g.stride] += srow[ow];
          }
        }
      }
    }
  }
}

/// Scratch storage left uninitialized; every consumer overwrites it fully.
template <typename T>
struct Scratch {
  std::unique_ptr<T[]> buf;
  explicit Scratch(std::size_t n) : buf(new T[n]) {}
  T* data() { return buf.get(); }
};

std::size_t chunk_for(const ConvGeom& g) {
  const std::size_t per_sample = std::max<std::size_t>(1, g.patch() * g.pixels());
  return std::clamp<std::size_t>(kColBudget / per_sample, 1, g.n);
}

template <typename T>
Var<T> unary(const char* op, Var<T> x, T (*f)(T), T (*df)(T x, T y)) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xid = x.id();
  auto& g = x.graph();
  Var<T> y;
  y = g.record(op, std::move(out), {x}, [xid, df](Graph<T>& gr, std::size_t self) {
    const auto& xv = gr.value(xid);
    const auto& yv = gr.value(self);
    auto dy = gr.grad_buffer(self);
    auto dx = gr.grad_buffer(xid);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * df(xv[i], yv[i]);
  });
  return y;
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw ConfigError("conv geometry: stride must be positive");
  if (in + 2 * pad < kernel) {
    throw ConfigError("conv geometry: kernel " + std::to_string(kernel) + " larger than padded input " +
                      std::to_string(in + 2 * pad));
  }
  const std::size_t span = in + 2 * pad - kernel;
  if (span % stride != 0) {
    throw ConfigError("conv geometry: (" + std::to_string(in) + " + 2*" + std::to_string(pad) + " - " +
                      std::to_string(kernel) + ") / " + std::to_string(stride) + " is not integral");
  }
  return span / stride + 1;
}

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, std::size_t stride, std::size_t pad) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 4, "conv2d");
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  require(xs[1] == ws[1], "conv2d",
          "input channels " + std::to_string(xs[1]) + " vs weight " + to_string(ws));
  if (b.valid()) require(b.shape() == Shape{ws[0]}, "conv2d", "bias must be [" + std::to_string(ws[0]) + "]");

  ConvGeom geo{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], stride, pad, 0, 0};
  geo.ho = conv_out_extent(geo.h, geo.kh, stride, pad);
  geo.wo = conv_out_extent(geo.w, geo.kw, stride, pad);

  const std::size_t P = geo.pixels();
  const std::size_t K = geo.patch();
  const std::size_t chunk = chunk_for(geo);
  Tensor<T> out(Shape{geo.n, geo.cout, geo.ho, geo.wo});
  Scratch<T> col(K * chunk * P);
  Scratch<T> y(geo.cout * chunk * P);
  ConstMatMap<T> wm(w.value().data().data(), geo.cout, K);
  const T* xd = x.value().data().data();
  for (std::size_t n0 = 0; n0 < geo.n; n0 += chunk) {
    const std::size_t cn = std::min(chunk, geo.n - n0);
    im2col(xd, geo, n0, cn, col.data());
    ConstMatMap<T> cm(col.data(), K, cn * P);
    MatMap<T> ym(y.data(), geo.cout, cn * P);
    ym.noalias() = wm * cm;
    for (std::size_t s = 0; s < cn; ++s) {
      for (std::size_t co = 0; co < geo.cout; ++co) {
        const T bias = b.valid() ? b.value()[co] : T(0);
        const T* src = y.data() + co * cn * P + s * P;
        T* dst = out.data().data() + ((n0 + s) * geo.cout + co) * P;
        for (std::size_t p = 0; p < P; ++p) dst[p] = src[p] + bias;
      }
    }
  }

  const std::size_t xid = x.id(), wid = w.id();
  const bool has_bias = b.valid();
  const std::size_t bid = has_bias ? b.id() : 0;
  return x.graph().record(
      "conv2d", std::move(out), {x, w, b}, [=](Graph<T>& g, std::size_t self) {
        const bool gx = g.requires_grad(xid), gw = g.requires_grad(wid);
        const bool gb = has_bias && g.requires_grad(bid);
        auto dout = g.grad_buffer(self);
        if (gb) {
          auto db = g.grad_buffer(bid);
          for (std::size_t n = 0; n < geo.n; ++n)
            for (std::size_t co = 0; co < geo.cout; ++co) {
              const T* src = dout.data() + (n * geo.cout + co) * P;
              T acc = T(0);
              for (std::size_t p = 0; p < P; ++p) acc += src[p];
              db[co] += acc;
            }
        }
        if (!gx && !gw) return;
        Scratch<T> col(K * chunk * P);
        Scratch<T> dy(geo.cout * chunk * P);
        const T* xd = g.value(xid).data().data();
        ConstMatMap<T> wm(g.value(wid).data().data(), geo.cout, K);
        RowMat<T> dw_acc;
        if (gw) dw_acc = RowMat<T>::Zero(geo.cout, K);
        for (std::size_t n0 = 0; n0 < geo.n; n0 += chunk) {
          const std::size_t cn = std::min(chunk, geo.n - n0);
          for (std::size_t s = 0; s < cn; ++s)
            for (std::size_t co = 0; co < geo.cout; ++co)
              std::copy_n(dout.data() + ((n0 + s) * geo.cout + co) * P, P, dy.data() + co * cn * P + s * P);
          ConstMatMap<T> dym(dy.data(), geo.cout, cn * P);
          if (gw) {
            im2col(xd, geo, n0, cn, col.data());
            ConstMatMap<T> cm(col.data(), K, cn * P);
            dw_acc.noalias() += dym * cm.transpose();
          }
          if (gx) {
            MatMap<T> dcol(col.data(), K, cn * P);
            dcol.noalias() = wm.transpose() * dym;
            col2im_add(col.data(), geo, n0, cn, g.grad_buffer(xid).data());
          }
        }
        if (gw) {
          auto dw = g.grad_buffer(wid);
          for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += dw_acc.data()[i];
        }
      });
}

template <typename T>
Var<T> upsample_nn2x(Var<T> x) {
  require_rank(x, 4, "upsample_nn2x");
  const auto s = x.shape();
  const std::size_t planes = s[0] * s[1], H = s[2], W = s[3];
  Tensor<T> out(Shape{s[0], s[1], 2 * H, 2 * W});
  const T* xd = x.value().data().data();
  T* od = out.data().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t h = 0; h < 2 * H; ++h)
      for (std::size_t w = 0; w < 2 * W; ++w) od[(p * 2 * H + h) * 2 * W + w] = xd[(p * H + h / 2) * W + w / 2];
  const std::size_t xid = x.id();
  return x.graph().record("upsample_nn2x", std::move(out), {x}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    auto dx = g.grad_buffer(xid);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t h = 0; h < 2 * H; ++h)
        for (std::size_t w = 0; w < 2 * W; ++w) dx[(p * H + h / 2) * W + w / 2] += dy[(p * 2 * H + h) * 2 * W + w];
  });
}

template <typename T>
Var<T> avgpool_overlap(Var<T> x) {
  require_rank(x, 4, "avgpool_overlap");
  const auto s = x.shape();
  const std::size_t planes = s[0] * s[1], H = s[2], W = s[3];
  if (H % 2 != 0 || W % 2 != 0) {
    throw ConfigError("avgpool_overlap: spatial extent must be even, got " + to_string(s));
  }
  const std::size_t Ho = H / 2, Wo = W / 2;
  // Window rows [2o-1, 2o+1] clipped to the input.
  auto lo = [](std::size_t o) { return o == 0 ? std::size_t(0) : 2 * o - 1; };
  auto hi = [](std::size_t o, std::size_t n) { return std::min(2 * o + 1, n - 1); };
  Tensor<T> out(Shape{s[0], s[1], Ho, Wo});
  const T* xd = x.value().data().data();
  T* od = out.data().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oh = 0; oh < Ho; ++oh)
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        T acc = T(0);
        const std::size_t h0 = lo(oh), h1 = hi(oh, H), w0 = lo(ow), w1 = hi(ow, W);
        for (std::size_t h = h0; h <= h1; ++h)
          for (std::size_t w = w0; w <= w1; ++w) acc += xd[(p * H + h) * W + w];
        od[(p * Ho + oh) * Wo + ow] = acc / T((h1 - h0 + 1) * (w1 - w0 + 1));
      }
  const std::size_t xid = x.id();
  return x.graph().record("avgpool_overlap", std::move(out), {x}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    auto dx = g.grad_buffer(xid);
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          const std::size_t h0 = lo(oh), h1 = hi(oh, H), w0 = lo(ow), w1 = hi(ow, W);
          const T share = dy[(p * Ho + oh) * Wo + ow] / T((h1 - h0 + 1) * (w1 - w0 + 1));
          for (std::size_t h = h0; h <= h1; ++h)
            for (std::size_t w = w0; w <= w1; ++w) dx[(p * H + h) * W + w] += share;
        }
  });
}

template <typename T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormState<T>* state, BnMode mode,
                 bool update_running) {
  require(x.valid(), "batchnorm", "missing input");
  const auto s = x.shape();
  require(s.size() == 2 || s.size() == 4, "batchnorm", "expected rank 2 or 4, got " + to_string(s));
  const std::size_t N = s[0], C = s[1], S = s.size() == 4 ? s[2] * s[3] : 1;
  require(gamma.shape() == Shape{C} && beta.shape() == Shape{C}, "batchnorm",
          "gamma/beta must be [" + std::to_string(C) + "]");
  if (mode == BnMode::Train && N < 2) throw ConfigError("batchnorm: train mode needs a batch of at least 2");
  if (mode == BnMode::Eval && state == nullptr) throw ConfigError("batchnorm: eval mode needs running statistics");
  if (state && (state->running_mean.size() != C || state->running_var.size() != C)) {
    throw DimensionError("batchnorm: running statistics do not match " + std::to_string(C) + " channels");
  }

  const T eps = T(state ? state->eps : 1e-5);
  const T* xd = x.value().data().data();
  const T* gd = gamma.value().data().data();
  const T* bd = beta.value().data().data();
  const std::size_t M = N * S;
  std::vector<T> xhat(x.value().size());
  std::vector<T> invstd(C);
  Tensor<T> out(s);
  for (std::size_t c = 0; c < C; ++c) {
    T mu, var;
    if (mode == BnMode::Train) {
      T acc = T(0);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < S; ++i) acc += xd[(n * C + c) * S + i];
      mu = acc / T(M);
      T sq = T(0);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < S; ++i) {
          const T d = xd[(n * C + c) * S + i] - mu;
          sq += d * d;
        }
      var = sq / T(M);
      if (state && update_running) {
        const T m = T(state->momentum);
        state->running_mean[c] = m * state->running_mean[c] + (T(1) - m) * mu;
        state->running_var[c] = m * state->running_var[c] + (T(1) - m) * (sq / T(M - 1));
      }
    } else {
      mu = state->running_mean[c];
      var = state->running_var[c];
    }
    invstd[c] = T(1) / std::sqrt(var + eps);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < S; ++i) {
        const std::size_t k = (n * C + c) * S + i;
        xhat[k] = (xd[k] - mu) * invstd[c];
        out[k] = gd[c] * xhat[k] + bd[c];
      }
  }

  const std::size_t xid = x.id(), gid = gamma.id(), bid = beta.id();
  const bool train = mode == BnMode::Train;
  return x.graph().record(
      "batchnorm", std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), invstd = std::move(invstd)](Graph<T>& g, std::size_t self) {
        auto dy = g.grad_buffer(self);
        const T* gd = g.value(gid).data().data();
        const bool gx = g.requires_grad(xid), gg = g.requires_grad(gid), gb = g.requires_grad(bid);
        for (std::size_t c = 0; c < C; ++c) {
          T sum_dy = T(0), sum_dy_xhat = T(0);
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t i = 0; i < S; ++i) {
              const std::size_t k = (n * C + c) * S + i;
              sum_dy += dy[k];
              sum_dy_xhat += dy[k] * xhat[k];
            }
          if (gg) g.grad_buffer(gid)[c] += sum_dy_xhat;
          if (gb) g.grad_buffer(bid)[c] += sum_dy;
          if (!gx) continue;
          auto dx = g.grad_buffer(xid);
          const T scale = gd[c] * invstd[c];
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t i = 0; i < S; ++i) {
              const std::size_t k = (n * C + c) * S + i;
              if (train) {
                dx[k] += scale * (dy[k] - sum_dy / T(M) - xhat[k] * sum_dy_xhat / T(M));
              } else {
                dx[k] += scale * dy[k];
              }
            }
        }
      });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, T alpha) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : alpha * xv[i];
  const std::size_t xid = x.id();
  return x.graph().record("leaky_relu", std::move(out), {x}, [=](Graph<T>& g, std::size_t self) {
    const auto& xv = g.value(xid);
    auto dy = g.grad_buffer(self);
    auto dx = g.grad_buffer(xid);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += xv[i] > T(0) ? dy[i] : alpha * dy[i];
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return leaky_relu(x, T(0));
}

template <typename T>
Var<T> tanh(Var<T> x) {
  return unary<T>(
      "tanh", x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> softplus(Var<T> x) {
  return unary<T>(
      "softplus", x,
      [](T v) { return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](T v, T) { return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v)); });
}

template <typename T>
Var<T> square(Var<T> x) {
  return unary<T>(
      "square", x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Var<T> sqrt(Var<T> x) {
  for (auto v : x.value().data()) {
    if (v < T(0)) throw NumericError("sqrt: negative input");
  }
  return unary<T>(
      "sqrt", x, [](T v) { return std::sqrt(v); }, [](T, T y) { return y > T(0) ? T(0.5) / y : T(0); });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t N = x.shape()[0], In = x.shape()[1], Out = w.shape()[0];
  require(w.shape()[1] == In, "linear", "input width " + std::to_string(In) + " vs weight " + to_string(w.shape()));
  if (b.valid()) require(b.shape() == Shape{Out}, "linear", "bias must be [" + std::to_string(Out) + "]");
  Tensor<T> out(Shape{N, Out});
  MatMap<T> ym(out.data().data(), N, Out);
  ym.noalias() = ConstMatMap<T>(x.value().data().data(), N, In) *
                 ConstMatMap<T>(w.value().data().data(), Out, In).transpose();
  if (b.valid()) {
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t o = 0; o < Out; ++o) out[n * Out + o] += b.value()[o];
  }
  const std::size_t xid = x.id(), wid = w.id();
  const bool has_bias = b.valid();
  const std::size_t bid = has_bias ? b.id() : 0;
  return x.graph().record("linear", std::move(out), {x, w, b}, [=](Graph<T>& g, std::size_t self) {
    ConstMatMap<T> dy(g.grad_buffer(self).data(), N, Out);
    if (g.requires_grad(xid)) {
      MatMap<T> dx(g.grad_buffer(xid).data(), N, In);
      dx.noalias() += dy * ConstMatMap<T>(g.value(wid).data().data(), Out, In);
    }
    if (g.requires_grad(wid)) {
      MatMap<T> dw(g.grad_buffer(wid).data(), Out, In);
      dw.noalias() += dy.transpose() * ConstMatMap<T>(g.value(xid).data().data(), N, In);
    }
    if (has_bias && g.requires_grad(bid)) {
      auto db = g.grad_buffer(bid);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < Out; ++o) db[o] += dy(n, o);
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.graph().record("add", std::move(out), {a, b}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    for (auto id : {aid, bid}) {
      if (!g.requires_grad(id)) continue;
      auto d = g.grad_buffer(id);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
    }
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same(a.shape(), b.shape(), "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.graph().record("sub", std::move(out), {a, b}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    if (g.requires_grad(aid)) {
      auto d = g.grad_buffer(aid);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
    }
    if (g.requires_grad(bid)) {
      auto d = g.grad_buffer(bid);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= dy[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.graph().record("mul", std::move(out), {a, b}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    if (g.requires_grad(aid)) {
      const auto& bv = g.value(bid);
      auto d = g.grad_buffer(aid);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * bv[i];
    }
    if (g.requires_grad(bid)) {
      const auto& av = g.value(aid);
      auto d = g.grad_buffer(bid);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  const std::size_t aid = a.id();
  return a.graph().record("scale", std::move(out), {a}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    auto d = g.grad_buffer(aid);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * s;
  });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + s;
  const std::size_t aid = a.id();
  return a.graph().record("add_scalar", std::move(out), {a}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    auto d = g.grad_buffer(aid);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
  });
}

template <typename T>
Var<T> concat(Var<T> a, Var<T> b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  require(as.size() >= 2 && as.size() == bs.size(), "concat", "ranks " + to_string(as) + " vs " + to_string(bs));
  require(as[0] == bs[0] && std::equal(as.begin() + 2, as.end(), bs.begin() + 2), "concat",
          "extents other than axis 1 differ: " + to_string(as) + " vs " + to_string(bs));
  const std::size_t N = as[0];
  const std::size_t inner = numel(Shape(as.begin() + 2, as.end()));
  const std::size_t ablock = as[1] * inner, bblock = bs[1] * inner;
  Shape os = as;
  os[1] = as[1] + bs[1];
  Tensor<T> out(os);
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(a.value().data().data() + n * ablock, ablock, out.data().data() + n * (ablock + bblock));
    std::copy_n(b.value().data().data() + n * bblock, bblock, out.data().data() + n * (ablock + bblock) + ablock);
  }
  const std::size_t aid = a.id(), bid = b.id();
  return a.graph().record("concat", std::move(out), {a, b}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    if (g.requires_grad(aid)) {
      auto d = g.grad_buffer(aid);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < ablock; ++i) d[n * ablock + i] += dy[n * (ablock + bblock) + i];
    }
    if (g.requires_grad(bid)) {
      auto d = g.grad_buffer(bid);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t i = 0; i < bblock; ++i) d[n * bblock + i] += dy[n * (ablock + bblock) + ablock + i];
    }
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value();
  out.reshape(std::move(shape));
  const std::size_t xid = x.id();
  return x.graph().record("reshape", std::move(out), {x}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    auto d = g.grad_buffer(xid);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T acc = T(0);
  for (auto v : x.value().data()) acc += v;
  const std::size_t xid = x.id();
  return x.graph().record("sum", Tensor<T>(Shape{1}, acc), {x}, [=](Graph<T>& g, std::size_t self) {
    const T dy = g.grad_buffer(self)[0];
    for (auto& d : g.grad_buffer(xid)) d += dy;
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  const std::size_t n = x.value().size();
  require(n > 0, "mean", "empty input");
  T acc = T(0);
  for (auto v : x.value().data()) acc += v;
  const std::size_t xid = x.id();
  return x.graph().record("mean", Tensor<T>(Shape{1}, acc / T(n)), {x}, [=](Graph<T>& g, std::size_t self) {
    const T dy = g.grad_buffer(self)[0] / T(n);
    for (auto& d : g.grad_buffer(xid)) d += dy;
  });
}

template <typename T>
Var<T> sum_rows(Var<T> x) {
  require(x.shape().size() >= 1, "sum_rows", "needs a batch axis");
  const std::size_t N = x.shape()[0];
  const std::size_t R = N ? x.value().size() / N : 0;
  Tensor<T> out(Shape{N});
  for (std::size_t n = 0; n < N; ++n) {
    T acc = T(0);
    for (std::size_t i = 0; i < R; ++i) acc += x.value()[n * R + i];
    out[n] = acc;
  }
  const std::size_t xid = x.id();
  return x.graph().record("sum_rows", std::move(out), {x}, [=](Graph<T>& g, std::size_t self) {
    auto dy = g.grad_buffer(self);
    auto d = g.grad_buffer(xid);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < R; ++i) d[n * R + i] += dy[n];
  });
}

template <typename T>
Var<T> mean_rows(Var<T> x) {
  require(x.shape().size() >= 1 && x.shape()[0] > 0, "mean_rows", "needs a non-empty batch axis");
  const std::size_t R = x.value().size() / x.shape()[0];
  require(R > 0, "mean_rows", "empty rows");
  return scale(sum_rows(x), T(1) / T(R));
}

template <typename T>
Var<T> logsumexp_rows(Var<T> x) {
  require_rank(x, 2, "logsumexp_rows");
  const std::size_t N = x.shape()[0], K = x.shape()[1];
  require(K > 0, "logsumexp_rows", "no columns");
  Tensor<T> out(Shape{N});
  std::vector<T> soft(N * K);
  for (std::size_t n = 0; n < N; ++n) {
    const T* row = x.value().data().data() + n * K;
    const T m = *std::max_element(row, row + K);
    T acc = T(0);
    for (std::size_t k = 0; k < K; ++k) {
      soft[n * K + k] = std::exp(row[k] - m);
      acc += soft[n * K + k];
    }
    for (std::size_t k = 0; k < K; ++k) soft[n * K + k] /= acc;
    out[n] = m + std::log(acc);
  }
  const std::size_t xid = x.id();
  return x.graph().record("logsumexp_rows", std::move(out), {x},
                          [=, soft = std::move(soft)](Graph<T>& g, std::size_t self) {
                            auto dy = g.grad_buffer(self);
                            auto d = g.grad_buffer(xid);
                            for (std::size_t n = 0; n < N; ++n)
                              for (std::size_t k = 0; k < K; ++k) d[n * K + k] += dy[n] * soft[n * K + k];
                          });
}

#define ARTGAN_INSTANTIATE_OPS(T)                                                                       \
  template Var<T> conv2d(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t);                            \
  template Var<T> upsample_nn2x(Var<T>);                                                                \
  template Var<T> avgpool_overlap(Var<T>);                                                              \
  template Var<T> batchnorm(Var<T>, Var<T>, Var<T>, BatchNormState<T>*, BnMode, bool);                  \
  template Var<T> leaky_relu(Var<T>, T);                                                                \
  template Var<T> relu(Var<T>);                                                                         \
  template Var<T> tanh(Var<T>);                                                                         \
  template Var<T> softplus(Var<T>);                                                                     \
  template Var<T> square(Var<T>);                                                                       \
  template Var<T> sqrt(Var<T>);                                                                         \
  template Var<T> linear(Var<T>, Var<T>, Var<T>);                                                       \
  template Var<T> add(Var<T>, Var<T>);                                                                  \
  template Var<T> sub(Var<T>, Var<T>);                                                                  \
  template Var<T> mul(Var<T>, Var<T>);                                                                  \
  template Var<T> scale(Var<T>, T);                                                                     \
  template Var<T> add_scalar(Var<T>, T);                                                                \
  template Var<T> concat(Var<T>, Var<T>);                                                               \
  template Var<T> reshape(Var<T>, Shape);                                                               \
  template Var<T> sum(Var<T>);                                                                          \
  template Var<T> mean(Var<T>);                                                                         \
  template Var<T> sum_rows(Var<T>);                                                                     \
  template Var<T> mean_rows(Var<T>);                                                                    \
  template Var<T> logsumexp_rows(Var<T>);

ARTGAN_INSTANTIATE_OPS(float)
ARTGAN_INSTANTIATE_OPS(double)

}  // namespace artgan::nd
