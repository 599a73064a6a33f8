#pragma once

// Independent reference implementations used only by tests. Straight loops,
// no shared code with the library kernels.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

/// Direct 6-loop cross-correlation over (n, co, oh, ow, ci, ki, kj).
inline std::vector<double> conv2d(const std::vector<double>& x, int N, int C, int H, int W,
                                  const std::vector<double>& w, int Co, int kh, int kw,
                                  const std::vector<double>& b, int stride, int pad, int& Ho, int& Wo) {
  Ho = (H + 2 * pad - kh) / stride + 1;
  Wo = (W + 2 * pad - kw) / stride + 1;
  std::vector<double> y(std::size_t(N) * Co * Ho * Wo, 0.0);
  for (int n = 0; n < N; ++n)
    for (int co = 0; co < Co; ++co)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          double acc = b.empty() ? 0.0 : b[co];
          for (int ci = 0; ci < C; ++ci)
            for (int i = 0; i < kh; ++i)
              for (int j = 0; j < kw; ++j) {
                const int ih = oh * stride - pad + i, iw = ow * stride - pad + j;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += x[((n * C + ci) * H + ih) * W + iw] * w[((co * C + ci) * kh + i) * kw + j];
              }
          y[((n * Co + co) * Ho + oh) * Wo + ow] = acc;
        }
  return y;
}

/// Sliding 3x3/stride-2/pad-1 window averaged over the taps that land inside.
inline std::vector<double> avgpool_overlap(const std::vector<double>& x, int N, int C, int H, int W) {
  const int Ho = H / 2, Wo = W / 2;
  std::vector<double> y(std::size_t(N) * C * Ho * Wo, 0.0);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          double acc = 0.0;
          int count = 0;
          for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) {
              const int ih = 2 * oh + i, iw = 2 * ow + j;
              if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
              acc += x[((n * C + c) * H + ih) * W + iw];
              ++count;
            }
          y[((n * C + c) * Ho + oh) * Wo + ow] = acc / count;
        }
  return y;
}

inline double log_sum_exp(const std::vector<double>& l) {
  const double m = *std::max_element(l.begin(), l.end());
  double s = 0.0;
  for (double v : l) s += std::exp(v - m);
  return m + std::log(s);
}

/// Categorical discriminator loss evaluated directly from probabilities.
/// real[i] are logits of real sample i, labels[i] its class; fake[j] logits.
inline double loss_d_cat(const std::vector<std::vector<double>>& real, const std::vector<int>& labels,
                         const std::vector<std::vector<double>>& fake) {
  double r = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    double Z = 0.0;
    for (double v : real[i]) Z += std::exp(v);
    const double pc = std::exp(real[i][labels[i]]) / Z;
    const double py = Z / (Z + 1.0);
    r += -(std::log(pc) + std::log(py));
  }
  double f = 0.0;
  for (const auto& l : fake) {
    double Z = 0.0;
    for (double v : l) Z += std::exp(v);
    f += -std::log(1.0 - Z / (Z + 1.0));
  }
  return r / real.size() + f / fake.size();
}

inline double loss_g_cat(const std::vector<std::vector<double>>& fake, const std::vector<int>& labels) {
  double acc = 0.0;
  for (std::size_t i = 0; i < fake.size(); ++i) {
    double Z = 0.0;
    for (double v : fake[i]) Z += std::exp(v);
    acc += -(std::log(std::exp(fake[i][labels[i]]) / Z) + std::log(Z / (Z + 1.0)));
  }
  return acc / fake.size();
}

/// Mean squared error of one sample.
inline double mse(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / n;
}

inline double l2(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Energy-based discriminator loss with a per-sample error vector for each side.
inline double loss_d_eb(const std::vector<double>& real_err, const std::vector<double>& fake_err, double m) {
  double r = 0.0, f = 0.0;
  for (double e : real_err) r += e;
  for (double e : fake_err) f += std::max(0.0, m - e);
  return r / real_err.size() + f / fake_err.size();
}

/// Two-player objective from probabilities D(x).
inline double gan_d(const std::vector<double>& d_real, const std::vector<double>& d_fake) {
  double r = 0.0, f = 0.0;
  for (double d : d_real) r -= std::log(d);
  for (double d : d_fake) f -= std::log(1.0 - d);
  return r / d_real.size() + f / d_fake.size();
}

inline double gan_g(const std::vector<double>& d_fake, bool saturating) {
  double acc = 0.0;
  for (double d : d_fake) acc += saturating ? std::log(1.0 - d) : -std::log(d);
  return acc / d_fake.size();
}

}  // namespace oracle
