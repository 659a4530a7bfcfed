// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/signal/features.h"

#include <algorithm>
#include <cmath>

#include "dnr/common/error.h"

namespace dnr::signal {

double MelFilterbank::hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double MelFilterbank::mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(int sample_rate, int fft_size, int num_filters,
                             double low_hz, double high_hz) {
  if (high_hz < 0.0) high_hz = sample_rate / 2.0;
  if (num_filters <= 0 || low_hz < 0.0 || high_hz <= low_hz ||
      high_hz > sample_rate / 2.0) {
    throw ConfigError("mel filterbank: invalid band or filter count");
  }
  const int bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(low_hz);
  const double mel_hi = hz_to_mel(high_hz);
  std::vector<double> edges(static_cast<std::size_t>(num_filters) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      (num_filters + 1));
  }
  weights_ = Matrix::Zero(num_filters, bins);
  support_.resize(static_cast<std::size_t>(num_filters));
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  for (int j = 0; j < num_filters; ++j) {
    const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
    int first = bins, last = 0;
    double sum = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double f = k * bin_hz;
      double v = 0.0;
      if (f > lo && f <= mid) {
        v = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        v = (hi - f) / (hi - mid);
      }
      if (v > 0.0) {
        weights_(j, k) = v;
        sum += v;
        first = std::min(first, k);
        last = std::max(last, k + 1);
      }
    }
    if (sum <= 0.0) {
      throw ConfigError("mel filterbank: filter " + std::to_string(j) +
                        " covers no fft bin; increase fft_size");
    }
    weights_.row(j) /= sum;
    support_[j] = {first, last};
  }
}

Matrix mel_features(const ComplexSpectrogram& s) {
  const MelFilterbank fb(s.config.sample_rate, s.config.fft_size, kNumMel, 0.0,
                         s.config.sample_rate / 2.0);
  return mel_features(s, fb);
}

Matrix mel_features(const ComplexSpectrogram& s, const MelFilterbank& fb) {
  if (fb.num_bins() != s.num_bins()) {
    throw ShapeError("mel_features: filterbank expects " +
                     std::to_string(fb.num_bins()) + " bins, spectrogram has " +
                     std::to_string(s.num_bins()));
  }
  const Matrix power = s.frames.cwiseAbs2();
  Matrix mel = power * fb.weights().transpose();
  for (Eigen::Index i = 0; i < mel.size(); ++i) {
    mel.data()[i] = std::log(std::max(mel.data()[i], kEnergyFloor));
  }
  return mel;
}

PitchTrack extract_f0(const Waveform& w, const StftConfig& cfg,
                      const PitchOptions& opts) {
  cfg.validate();
  if (w.empty()) throw ShapeError("extract_f0: empty waveform");
  const int frame = cfg.frame_samples();
  const int shift = cfg.shift_samples();
  const int n_frames = num_frames(w.size(), cfg);
  const int min_lag =
      std::max(1, static_cast<int>(std::ceil(w.sample_rate / opts.max_hz)));
  const int max_lag = std::min(
      frame - 2, static_cast<int>(std::floor(w.sample_rate / opts.min_hz)));

  PitchTrack track;
  track.f0.assign(static_cast<std::size_t>(n_frames), 0.0);
  track.vuv.assign(static_cast<std::size_t>(n_frames), false);
  std::vector<double> x(static_cast<std::size_t>(frame));
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 2, -1.0);

  for (int n = 0; n < n_frames; ++n) {
    // Tail frames are analysed on the last full window so they are not
    // judged on a mostly zero-padded buffer.
    std::size_t start = static_cast<std::size_t>(n) * shift;
    if (w.size() >= static_cast<std::size_t>(frame)) {
      start = std::min(start, w.size() - frame);
    } else {
      start = 0;
    }
    double mean = 0.0;
    for (int t = 0; t < frame; ++t) {
      const std::size_t i = start + t;
      x[t] = i < w.size() ? w.samples[i] : 0.0;
      mean += x[t];
    }
    mean /= frame;
    double energy = 0.0;
    for (double& v : x) {
      v -= mean;
      energy += v * v;
    }
    if (energy < 1e-10 * frame) continue;

    int best = -1;
    double best_r = -1.0;
    for (int lag = min_lag; lag <= max_lag + 1 && lag < frame; ++lag) {
      double xy = 0.0, xx = 0.0, yy = 0.0;
      for (int t = 0; t + lag < frame; ++t) {
        xy += x[t] * x[t + lag];
        xx += x[t] * x[t];
        yy += x[t + lag] * x[t + lag];
      }
      const double den = std::sqrt(xx * yy);
      r[lag] = den > 0.0 ? xy / den : 0.0;
    }
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] > best_r) {
        best_r = r[lag];
        best = lag;
      }
    }
    if (best < 0 || best_r < opts.voicing_threshold) continue;
    // Prefer the shortest lag that nearly matches the best peak, which
    // suppresses octave-down errors on strongly periodic frames.
    for (int lag = min_lag; lag < best; ++lag) {
      const bool peak = r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1];
      if (peak && r[lag] >= 0.95 * best_r) {
        best = lag;
        break;
      }
    }
    double lag = best;
    if (best > min_lag && best < max_lag) {
      const double a = r[best - 1], b = r[best], c = r[best + 1];
      const double den = a - 2.0 * b + c;
      if (den < 0.0) lag += 0.5 * (a - c) / den;
    }
    track.f0[n] = w.sample_rate / lag;
    track.vuv[n] = true;
  }
  return track;
}

AcousticFeatures acoustic_features(const Waveform& w, const StftConfig& cfg) {
  const ComplexSpectrogram s = stft(w, cfg);
  AcousticFeatures f;
  f.mel = mel_features(s);
  PitchTrack p = extract_f0(w, cfg);
  f.f0 = std::move(p.f0);
  f.vuv = std::move(p.vuv);
  return f;
}

}  // namespace dnr::signal
