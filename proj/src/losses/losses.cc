// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/losses/losses.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include "dnr/common/error.h"
#include "dnr/nn/ops.h"
#include "dnr/signal/fft.h"

namespace dnr::losses {

using nn::Tensor;
using nn::Var;

std::vector<StftScale> default_stft_scales() {
  return {{512, 128, 480}, {1024, 256, 960}, {2048, 512, 1920}};
}

void LossWeights::validate() const {
  if (!(lambda_c > 0.0)) throw ConfigError("lambda_c must be positive");
  if (!(gp_gamma >= 0.0)) throw ConfigError("gp_gamma must be nonnegative");
  if (stft_scales.empty()) throw ConfigError("at least one STFT scale is required");
  for (const auto& s : stft_scales) {
    if (s.fft <= 0 || s.shift <= 0 || s.frame <= 0 || s.frame > s.fft) {
      throw ConfigError("invalid STFT scale (" + std::to_string(s.fft) + ", " +
                        std::to_string(s.shift) + ", " + std::to_string(s.frame) + ")");
    }
  }
}

double mse_las(const signal::Las& target, const signal::Las& pred) {
  if (target.values.rows() != pred.values.rows() ||
      target.values.cols() != pred.values.cols()) {
    throw ShapeError("mse_las: " + std::to_string(target.values.rows()) + "x" +
                     std::to_string(target.values.cols()) + " vs " +
                     std::to_string(pred.values.rows()) + "x" +
                     std::to_string(pred.values.cols()));
  }
  if (target.values.size() == 0) throw ShapeError("mse_las: empty LAS");
  return (target.values - pred.values).squaredNorm() /
         static_cast<double>(target.values.size());
}

Var mse(const Var& target, const Var& pred) {
  return nn::mean(nn::square(nn::sub(target, pred)));
}

double neg_correlation(std::span<const double> r, std::span<const double> r_hat) {
  if (r.size() != r_hat.size() || r.empty()) {
    throw ShapeError("neg_correlation: lengths " + std::to_string(r.size()) + " and " +
                     std::to_string(r_hat.size()));
  }
  const double n = static_cast<double>(r.size());
  double mr = 0.0, mh = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    mr += r[i];
    mh += r_hat[i];
  }
  mr /= n;
  mh /= n;
  double cov = 0.0, vr = 0.0, vh = 0.0, peak_r = 0.0, peak_h = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    peak_r = std::max(peak_r, std::abs(r[i]));
    peak_h = std::max(peak_h, std::abs(r_hat[i]));
    cov += (r[i] - mr) * (r_hat[i] - mh);
    vr += (r[i] - mr) * (r[i] - mr);
    vh += (r_hat[i] - mh) * (r_hat[i] - mh);
  }
  // Rounding in the mean leaves a residue on constant inputs.
  const double tiny = 1e-24 * n;
  if (vr <= tiny * peak_r * peak_r || vh <= tiny * peak_h * peak_h || vr == 0.0 ||
      vh == 0.0) {
    throw NumericError("neg_correlation: zero-variance RIR");
  }
  return -cov / std::sqrt(vr * vh);
}

double neg_correlation(const degrade::Rir& r, const degrade::Rir& r_hat) {
  return neg_correlation(r.taps, r_hat.taps);
}

Var neg_correlation(const Var& r, const Var& r_hat) {
  const double value = neg_correlation(r.value().vec(), r_hat.value().vec());
  if (r.shape() != r_hat.shape()) {
    throw ShapeError("neg_correlation: shapes " + nn::shape_str(r.shape()) + " and " +
                     nn::shape_str(r_hat.shape()));
  }
  return nn::make_result(
      Tensor::scalar(value), {r, r_hat}, "neg_correlation",
      [r, r_hat](const Tensor& g, const Tensor& y) {
        const auto& a0 = r.value().vec();
        const auto& b0 = r_hat.value().vec();
        const std::size_t n = a0.size();
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          ma += a0[i];
          mb += b0[i];
        }
        ma /= n;
        mb /= n;
        double na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          na += (a0[i] - ma) * (a0[i] - ma);
          nb += (b0[i] - mb) * (b0[i] - mb);
        }
        na = std::sqrt(na);
        nb = std::sqrt(nb);
        const double rho = -y[0];
        // d rho / d b = a / (|a||b|) - rho b / |b|^2 (already zero-mean).
        Tensor da(r.shape()), db(r_hat.shape());
        for (std::size_t i = 0; i < n; ++i) {
          const double a = a0[i] - ma, b = b0[i] - mb;
          db[i] = -g[0] * (a / (na * nb) - rho * b / (nb * nb));
          da[i] = -g[0] * (b / (na * nb) - rho * a / (na * na));
        }
        accumulate_grad(r, std::move(da));
        accumulate_grad(r_hat, std::move(db));
      });
}

namespace {

struct Framing {
  int frames;
  int left_pad;
};

Framing symmetric_framing(std::size_t length, const StftScale& s) {
  const long long extra = s.frame - s.shift;
  const long long span = static_cast<long long>(length) + extra;
  long long m = span <= s.frame ? 1 : (span - s.frame + s.shift - 1) / s.shift + 1;
  const long long padded = (m - 1) * s.shift + s.frame;
  return {static_cast<int>(m), static_cast<int>((padded - static_cast<long long>(length)) / 2)};
}

std::vector<double> symmetric_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = n == 1 ? 1.0 : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  }
  return w;
}

// Frame-major magnitude spectra and raw spectra of one signal at one scale.
struct ScaleSpectra {
  std::vector<std::vector<signal::Complex>> spec;
};

ScaleSpectra analyse(const std::vector<double>& x, const StftScale& s,
                     const Framing& f, const std::vector<double>& win) {
  ScaleSpectra out;
  out.spec.resize(f.frames);
  std::vector<double> buf(s.frame);
  const long long len = static_cast<long long>(x.size());
  for (int m = 0; m < f.frames; ++m) {
    const long long start = static_cast<long long>(m) * s.shift - f.left_pad;
    for (int t = 0; t < s.frame; ++t) {
      const long long idx = start + t;
      buf[t] = (idx >= 0 && idx < len) ? x[idx] * win[t] : 0.0;
    }
    out.spec[m] = signal::rfft(buf, s.fft);
  }
  return out;
}

struct ScaleTerms {
  double sc;
  double log_l1;
};

ScaleTerms scale_terms(const ScaleSpectra& X, const ScaleSpectra& Y) {
  double diff = 0.0, ref = 0.0, l1 = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < X.spec.size(); ++m) {
    for (std::size_t k = 0; k < X.spec[m].size(); ++k) {
      const double ax = std::abs(X.spec[m][k]), ay = std::abs(Y.spec[m][k]);
      diff += (ax - ay) * (ax - ay);
      ref += ax * ax;
      l1 += std::abs(std::log(std::max(ax, signal::kAmpFloor)) -
                     std::log(std::max(ay, signal::kAmpFloor)));
      ++count;
    }
  }
  if (ref <= 0.0) throw NumericError("multi-scale STFT loss: silent reference");
  return {std::sqrt(diff) / std::sqrt(ref), l1 / static_cast<double>(count)};
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError("multi-scale STFT loss: lengths " + std::to_string(a) + " and " +
                     std::to_string(b));
  }
  if (a == 0) throw ShapeError("multi-scale STFT loss: empty signals");
}

}  // namespace

double multiscale_stft_loss(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<StftScale>& scales) {
  check_lengths(x.size(), y.size());
  if (scales.empty()) throw ConfigError("no STFT scales");
  double total = 0.0;
  for (const auto& s : scales) {
    const Framing f = symmetric_framing(x.size(), s);
    const auto win = symmetric_hann(s.frame);
    const ScaleTerms t = scale_terms(analyse(x, s, f, win), analyse(y, s, f, win));
    total += t.sc + t.log_l1;
  }
  return total / static_cast<double>(scales.size());
}

double multiscale_stft_loss(const signal::Waveform& x, const signal::Waveform& y,
                            const std::vector<StftScale>& scales) {
  signal::require_same_rate(x, y);
  return multiscale_stft_loss(x.samples, y.samples, scales);
}

Var multiscale_stft_loss(const std::vector<double>& x, const Var& y,
                         const std::vector<StftScale>& scales) {
  check_lengths(x.size(), y.value().size());
  if (scales.empty()) throw ConfigError("no STFT scales");
  const std::vector<double> yv = y.value().to_vector();
  struct Cache {
    StftScale scale;
    Framing framing;
    std::vector<double> win;
    ScaleSpectra X, Y;
    double diff_norm, ref_norm;
    std::size_t count;
  };
  auto caches = std::make_shared<std::vector<Cache>>();
  double total = 0.0;
  for (const auto& s : scales) {
    Cache c{s, symmetric_framing(x.size(), s), symmetric_hann(s.frame), {}, {}, 0, 0, 0};
    c.X = analyse(x, s, c.framing, c.win);
    c.Y = analyse(yv, s, c.framing, c.win);
    const ScaleTerms t = scale_terms(c.X, c.Y);
    double ref = 0.0;
    for (const auto& frame : c.X.spec) {
      for (const auto& v : frame) ref += std::norm(v);
    }
    c.ref_norm = std::sqrt(ref);
    c.diff_norm = t.sc * c.ref_norm;
    c.count = c.X.spec.size() * c.X.spec[0].size();
    total += t.sc + t.log_l1;
    caches->push_back(std::move(c));
  }
  const double inv_scales = 1.0 / static_cast<double>(scales.size());
  return nn::make_result(
      Tensor::scalar(total * inv_scales), {y}, "multiscale_stft_loss",
      [y, caches, inv_scales](const Tensor& g, const Tensor&) {
        Tensor dy(y.shape());
        const long long len = static_cast<long long>(dy.size());
        for (const Cache& c : *caches) {
          const double w_sc = c.diff_norm > 0.0 ? 1.0 / (c.diff_norm * c.ref_norm) : 0.0;
          const double w_l1 = 1.0 / static_cast<double>(c.count);
          std::vector<signal::Complex> coef;
          for (std::size_t m = 0; m < c.Y.spec.size(); ++m) {
            const auto& X = c.X.spec[m];
            const auto& Y = c.Y.spec[m];
            coef.assign(Y.size(), 0.0);
            for (std::size_t k = 0; k < Y.size(); ++k) {
              const double ay = std::abs(Y[k]);
              if (ay <= 0.0) continue;
              const double ax = std::abs(X[k]);
              // d loss / d |Y_k|
              double d = (ay - ax) * w_sc;
              if (ay > signal::kAmpFloor) {
                const double lx = std::log(std::max(ax, signal::kAmpFloor));
                const double diff = lx - std::log(ay);
                if (diff > 0.0) d -= w_l1 / ay;
                if (diff < 0.0) d += w_l1 / ay;
              }
              coef[k] = (g[0] * inv_scales * d / ay) * Y[k];
            }
            const std::vector<double> frame =
                signal::half_spectrum_synthesis(coef, c.scale.fft);
            const long long start =
                static_cast<long long>(m) * c.scale.shift - c.framing.left_pad;
            for (int t = 0; t < c.scale.frame; ++t) {
              const long long idx = start + t;
              if (idx >= 0 && idx < len) dy[idx] += frame[t] * c.win[t];
            }
          }
        }
        accumulate_grad(y, std::move(dy));
      });
}

Var convolve(const std::vector<double>& x, const Var& h) {
  auto xs = std::make_shared<std::vector<double>>(x);
  Tensor out({static_cast<std::int64_t>(x.size())},
             signal::convolve_truncated(x, h.value().vec()));
  return nn::make_result(std::move(out), {h}, "convolve",
                         [xs, h](const Tensor& g, const Tensor&) {
                           accumulate_grad(h, Tensor(h.shape(), signal::correlate_truncated(
                                                                    g.vec(), *xs,
                                                                    h.value().size())));
                         });
}

double l_rs(const signal::Waveform& noisy_reverberant, const signal::Waveform& noisy,
            const degrade::Rir& r_hat, const std::vector<StftScale>& scales) {
  const signal::Waveform predicted = degrade::convolve_rir(noisy, r_hat);
  return multiscale_stft_loss(noisy_reverberant, predicted, scales);
}

Var l_rs(const std::vector<double>& noisy_reverberant, const std::vector<double>& noisy,
         const Var& r_hat, const std::vector<StftScale>& scales) {
  bool nonzero = false;
  for (double v : r_hat.value().vec()) nonzero = nonzero || v != 0.0;
  if (!nonzero) throw NumericError("L_R-S: predicted RIR is all zeros");
  return multiscale_stft_loss(noisy_reverberant, convolve(noisy, r_hat), scales);
}

}  // namespace dnr::losses
