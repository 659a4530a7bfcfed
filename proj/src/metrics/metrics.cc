// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dnr/common/error.h"
#include "dnr/signal/fft.h"
#include "dnr/signal/stft.h"

namespace dnr::metrics {

namespace {

constexpr int kStoiRate = 10000;
constexpr int kStoiFrame = 256;
constexpr int kStoiFft = 512;
constexpr int kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr int kStoiSegment = 30;
constexpr double kStoiBeta = -15.0;
constexpr double kStoiDynRange = 40.0;
constexpr double kEps = 1e-12;

void require_same(const signal::Waveform& a, const signal::Waveform& b, const char* what) {
  signal::require_same_rate(a, b);
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  if (a.empty()) throw ShapeError(std::string(what) + ": empty signals");
}

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 50; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Hann of length n + 2 without its zero end points.
std::vector<double> inner_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  }
  return w;
}

// Drops frames more than kStoiDynRange below the loudest clean frame and
// overlap-adds what remains of both signals.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const int hop = kStoiFrame / 2;
  const auto w = inner_hann(kStoiFrame);
  std::vector<int> starts;
  for (int s = 0; s + kStoiFrame < static_cast<int>(x.size()); s += hop) starts.push_back(s);
  std::vector<double> energy(starts.size());
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double e = 0.0;
    for (int t = 0; t < kStoiFrame; ++t) {
      const double v = w[t] * x[starts[f] + t];
      e += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  const double top = energy.empty() ? 0.0 : *std::max_element(energy.begin(), energy.end());
  std::vector<int> kept;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    if (top - kStoiDynRange - energy[f] < 0.0) kept.push_back(starts[f]);
  }
  const std::size_t out_len = kept.empty() ? 0 : (kept.size() - 1) * hop + kStoiFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t f = 0; f < kept.size(); ++f) {
    for (int t = 0; t < kStoiFrame; ++t) {
      xo[f * hop + t] += w[t] * x[kept[f] + t];
      yo[f * hop + t] += w[t] * y[kept[f] + t];
    }
  }
  x = std::move(xo);
  y = std::move(yo);
}

// [bands][frames] one-third octave band envelopes.
std::vector<std::vector<double>> band_envelopes(const std::vector<double>& x) {
  const int hop = kStoiFrame / 2;
  const auto w = inner_hann(kStoiFrame);
  const int bins = kStoiFft / 2 + 1;
  std::vector<std::pair<int, int>> bands(kStoiBands);
  auto nearest_bin = [&](double hz) {
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < bins; ++k) {
      const double d = std::abs(static_cast<double>(k) * kStoiRate / kStoiFft - hz);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  for (int b = 0; b < kStoiBands; ++b) {
    const double lo = kStoiMinFreq * std::pow(2.0, (2.0 * b - 1.0) / 6.0);
    const double hi = kStoiMinFreq * std::pow(2.0, (2.0 * b + 1.0) / 6.0);
    bands[b] = {nearest_bin(lo), nearest_bin(hi)};
  }
  std::vector<std::vector<double>> env(kStoiBands);
  std::vector<double> frame(kStoiFrame);
  for (int s = 0; s + kStoiFrame < static_cast<int>(x.size()); s += hop) {
    for (int t = 0; t < kStoiFrame; ++t) frame[t] = w[t] * x[s + t];
    const auto spec = signal::rfft(frame, kStoiFft);
    for (int b = 0; b < kStoiBands; ++b) {
      double e = 0.0;
      for (int k = bands[b].first; k < bands[b].second; ++k) e += std::norm(spec[k]);
      env[b].push_back(std::sqrt(e));
    }
  }
  return env;
}

}  // namespace

std::vector<double> resample(const std::vector<double>& x, int up, int down) {
  if (up <= 0 || down <= 0) throw ConfigError("resample factors must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return x;
  const int half = 10 * std::max(up, down);
  const int taps = 2 * half + 1;
  const double cutoff = 0.5 / std::max(up, down);  // cycles per upsampled sample
  const double beta = 5.0;
  std::vector<double> h(taps);
  for (int n = 0; n < taps; ++n) {
    const double t = n - half;
    const double sinc = t == 0.0 ? 1.0
                                 : std::sin(2.0 * std::numbers::pi * cutoff * t) /
                                       (std::numbers::pi * t) / (2.0 * cutoff);
    const double r = t / half;
    const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / bessel_i0(beta);
    h[n] = up * 2.0 * cutoff * sinc * win;
  }
  const std::size_t out_len = (x.size() * up + down - 1) / down;
  std::vector<double> y(out_len, 0.0);
  const long long in_len = static_cast<long long>(x.size());
  for (std::size_t m = 0; m < out_len; ++m) {
    // Position on the upsampled grid, centred on the filter.
    const long long centre = static_cast<long long>(m) * down;
    double acc = 0.0;
    // Upsampled index j = centre - (n - half) must be a multiple of up.
    long long n0 = (centre + half) % up;
    for (long long n = n0; n < taps; n += up) {
      const long long j = centre + half - n;
      if (j < 0) break;
      const long long i = j / up;
      if (i < in_len) acc += h[n] * x[i];
    }
    y[m] = acc;
  }
  return y;
}

double stoi(const signal::Waveform& clean, const signal::Waveform& processed) {
  require_same(clean, processed, "stoi");
  std::vector<double> x = resample(clean.samples, kStoiRate, clean.sample_rate);
  std::vector<double> y = resample(processed.samples, kStoiRate, processed.sample_rate);
  remove_silent_frames(x, y);
  const auto ex = band_envelopes(x);
  const auto ey = band_envelopes(y);
  const int frames = ex.empty() ? 0 : static_cast<int>(ex[0].size());
  if (frames < kStoiSegment) {
    throw ShapeError("stoi: clip has " + std::to_string(frames) +
                     " active frames, fewer than one " + std::to_string(kStoiSegment) +
                     "-frame analysis segment");
  }
  const double clip = std::pow(10.0, -kStoiBeta / 20.0);
  double total = 0.0;
  int count = 0;
  std::vector<double> xs(kStoiSegment), ys(kStoiSegment);
  for (int m = kStoiSegment; m <= frames; ++m) {
    for (int b = 0; b < kStoiBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (int t = 0; t < kStoiSegment; ++t) {
        xs[t] = ex[b][m - kStoiSegment + t];
        ys[t] = ey[b][m - kStoiSegment + t];
        nx += xs[t] * xs[t];
        ny += ys[t] * ys[t];
      }
      const double alpha = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (int t = 0; t < kStoiSegment; ++t) {
        ys[t] = std::min(alpha * ys[t], xs[t] * (1.0 + clip));
        mx += xs[t];
        my += ys[t];
      }
      mx /= kStoiSegment;
      my /= kStoiSegment;
      double num = 0.0, dx = 0.0, dy = 0.0;
      for (int t = 0; t < kStoiSegment; ++t) {
        num += (xs[t] - mx) * (ys[t] - my);
        dx += (xs[t] - mx) * (xs[t] - mx);
        dy += (ys[t] - my) * (ys[t] - my);
      }
      total += num / (std::sqrt(dx) * std::sqrt(dy) + kEps);
      ++count;
    }
  }
  return total / count;
}

double log_spectral_distance(const signal::Waveform& clean, const signal::Waveform& processed) {
  require_same(clean, processed, "log_spectral_distance");
  const signal::StftConfig cfg;
  const auto a = signal::stft(clean, cfg);
  const auto b = signal::stft(processed, cfg);
  double acc = 0.0;
  const Eigen::Index n = a.frames.rows(), k = a.frames.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double d = 20.0 * std::log10(std::max(std::abs(a.frames(i, j)), signal::kAmpFloor)) -
                       20.0 * std::log10(std::max(std::abs(b.frames(i, j)), signal::kAmpFloor));
      acc += d * d;
    }
  }
  return std::sqrt(acc / static_cast<double>(n * k));
}

double segmental_snr(const signal::Waveform& clean, const signal::Waveform& processed) {
  require_same(clean, processed, "segmental_snr");
  const std::size_t seg = static_cast<std::size_t>(std::lround(0.030 * clean.sample_rate));
  const std::size_t count = clean.size() / seg;
  if (count == 0) {
    throw ShapeError("segmental_snr: signal shorter than one " + std::to_string(seg) +
                     "-sample segment");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < count; ++s) {
    double sig = 0.0, err = 0.0;
    for (std::size_t t = s * seg; t < (s + 1) * seg; ++t) {
      const double e = clean.samples[t] - processed.samples[t];
      sig += clean.samples[t] * clean.samples[t];
      err += e * e;
    }
    double snr;
    if (err == 0.0) {
      snr = kSegSnrMax;
    } else if (sig == 0.0) {
      snr = kSegSnrMin;
    } else {
      snr = std::clamp(10.0 * std::log10(sig / err), kSegSnrMin, kSegSnrMax);
    }
    total += snr;
  }
  return total / static_cast<double>(count);
}

}  // namespace dnr::metrics
