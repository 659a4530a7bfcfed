// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/degrade/sources.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/signal/wav_io.h"

namespace dnr::degrade {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void normalize_peak(std::vector<double>& x, double peak) {
  const double p = signal::peak_abs(x);
  if (p > 0.0) {
    for (double& v : x) v *= peak / p;
  }
}

// Second-order resonator (bandpass-like) applied in place.
void resonate(std::vector<double>& x, double hz, double bw, int rate) {
  const double r = std::exp(-std::numbers::pi * bw / rate);
  const double a1 = -2.0 * r * std::cos(kTwoPi * hz / rate);
  const double a2 = r * r;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = (1.0 - r) * v - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

double formant_gain(double hz, const std::array<double, 3>& formants) {
  double g = 0.0;
  const double bw[3] = {90.0, 120.0, 160.0};
  for (int i = 0; i < 3; ++i) {
    const double d = (hz - formants[i]) / bw[i];
    g += std::exp(-0.5 * d * d) / (i + 1.0);
  }
  return g + 0.02;
}

}  // namespace

signal::Waveform synth_speech(std::uint64_t seed, double seconds, int rate) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(seconds * rate);
  signal::Waveform w{std::vector<double>(n, 0.0), rate};
  std::size_t t = static_cast<std::size_t>(rng.uniform(0.02, 0.08) * rate);
  const double base_f0 = rng.uniform(95.0, 210.0);
  while (t < n) {
    if (rng.uniform() < 0.3) {
      // Fricative burst: resonant high-frequency noise.
      const auto len = static_cast<std::size_t>(rng.uniform(0.04, 0.1) * rate);
      std::vector<double> burst(len);
      for (double& v : burst) v = rng.normal();
      resonate(burst, rng.uniform(3000.0, 6000.0), 1500.0, rate);
      for (std::size_t i = 0; i < len && t + i < n; ++i) {
        const double env = std::sin(std::numbers::pi * i / len);
        w.samples[t + i] += 0.6 * env * burst[i];
      }
      t += len;
    }
    const auto len = static_cast<std::size_t>(rng.uniform(0.12, 0.28) * rate);
    const double f0_start = base_f0 * rng.uniform(0.85, 1.15);
    const double f0_end = base_f0 * rng.uniform(0.8, 1.2);
    const std::array<double, 3> f_start{rng.uniform(300, 800), rng.uniform(900, 2200),
                                        rng.uniform(2300, 3200)};
    const std::array<double, 3> f_end{rng.uniform(300, 800), rng.uniform(900, 2200),
                                      rng.uniform(2300, 3200)};
    double phase = 0.0;
    for (std::size_t i = 0; i < len && t + i < n; ++i) {
      const double u = static_cast<double>(i) / len;
      const double f0 = f0_start + (f0_end - f0_start) * u;
      std::array<double, 3> fm;
      for (int k = 0; k < 3; ++k) fm[k] = f_start[k] + (f_end[k] - f_start[k]) * u;
      phase += kTwoPi * f0 / rate;
      double s = 0.0;
      for (int h = 1; h * f0 < 0.45 * rate && h <= 60; ++h) {
        s += formant_gain(h * f0, fm) * std::sin(h * phase) / std::sqrt(h);
      }
      const double env = std::pow(std::sin(std::numbers::pi * u), 0.6);
      w.samples[t + i] += env * s;
    }
    t += len + static_cast<std::size_t>(rng.uniform(0.01, 0.09) * rate);
  }
  normalize_peak(w.samples, 0.5);
  return w;
}

std::string noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    case NoiseKind::kBrown: return "brown";
    case NoiseKind::kHum: return "hum";
    case NoiseKind::kBabble: return "babble";
  }
  return "unknown";
}

signal::Waveform synth_noise(NoiseKind kind, std::uint64_t seed, double seconds,
                             int rate) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(seconds * rate);
  signal::Waveform w{std::vector<double>(n, 0.0), rate};
  switch (kind) {
    case NoiseKind::kWhite:
      for (double& v : w.samples) v = rng.normal();
      break;
    case NoiseKind::kPink: {
      // Paul Kellet's economy filter.
      double b0 = 0, b1 = 0, b2 = 0;
      for (double& v : w.samples) {
        const double x = rng.normal();
        b0 = 0.99765 * b0 + x * 0.0990460;
        b1 = 0.96300 * b1 + x * 0.2965164;
        b2 = 0.57000 * b2 + x * 1.0526913;
        v = b0 + b1 + b2 + x * 0.1848;
      }
      break;
    }
    case NoiseKind::kBrown: {
      double acc = 0.0;
      for (double& v : w.samples) {
        acc = 0.995 * acc + 0.1 * rng.normal();
        v = acc;
      }
      break;
    }
    case NoiseKind::kHum: {
      const double f = rng.uniform(48.0, 62.0);
      for (std::size_t t = 0; t < n; ++t) {
        double s = 0.0;
        for (int h = 1; h <= 8; ++h) s += std::sin(kTwoPi * h * f * t / rate) / h;
        w.samples[t] = s + 0.05 * rng.normal();
      }
      break;
    }
    case NoiseKind::kBabble:
      for (int k = 0; k < 6; ++k) {
        const auto talker = synth_speech(derive_seed(seed, k), seconds, rate);
        for (std::size_t t = 0; t < n; ++t) w.samples[t] += talker.samples[t];
      }
      break;
  }
  normalize_peak(w.samples, 0.5);
  return w;
}

Rir synth_rir(std::uint64_t seed, double t60, int rate) {
  if (!(t60 > 0.0)) throw ConfigError("t60 must be positive");
  Rng rng(seed);
  std::vector<double> taps(kRirLength, 0.0);
  const int delay = static_cast<int>(rng.below(40));
  taps[delay] = 1.0;
  const double decay = std::log(1000.0) / (t60 * rate);
  for (int t = delay + 1; t < kRirLength; ++t) {
    taps[t] = 0.5 * rng.normal() * std::exp(-decay * (t - delay));
  }
  return make_rir(std::move(taps), rate);
}

void make_toy_sources(const std::filesystem::path& dir,
                      const ToySourceOptions& o) {
  namespace fs = std::filesystem;
  for (const char* sub : {"clean", "noise", "rir"}) fs::create_directories(dir / sub);
  char name[64];
  for (int i = 0; i < o.num_clean; ++i) {
    std::snprintf(name, sizeof name, "utt%03d.wav", i);
    signal::write_wav(dir / "clean" / name,
                      synth_speech(derive_seed(o.seed, 1000 + i), o.seconds));
  }
  const NoiseKind kinds[] = {NoiseKind::kWhite, NoiseKind::kPink, NoiseKind::kBabble,
                             NoiseKind::kBrown, NoiseKind::kHum};
  for (int i = 0; i < o.num_noise; ++i) {
    const NoiseKind kind = kinds[i % 5];
    std::snprintf(name, sizeof name, "%s%02d.wav", noise_kind_name(kind).c_str(), i);
    signal::write_wav(dir / "noise" / name,
                      synth_noise(kind, derive_seed(o.seed, 2000 + i), o.seconds * 1.5));
  }
  for (int i = 0; i < o.num_rir; ++i) {
    const double t60 = 0.15 + 0.5 * i / std::max(1, o.num_rir - 1);
    std::snprintf(name, sizeof name, "room%02d_t60_%03d.wav", i,
                  static_cast<int>(std::lround(t60 * 1000)));
    const Rir r = synth_rir(derive_seed(o.seed, 3000 + i), t60);
    signal::write_wav(dir / "rir" / name, {r.taps, r.sample_rate});
  }
}

}  // namespace dnr::degrade
