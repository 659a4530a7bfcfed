// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/signal/stft.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dnr/common/error.h"
#include "dnr/signal/fft.h"

namespace dnr::signal {

WindowType parse_window(const std::string& name) {
  if (name == "hann") return WindowType::kHann;
  if (name == "hamming") return WindowType::kHamming;
  if (name == "rect" || name == "rectangular") return WindowType::kRectangular;
  throw ConfigError("unknown window type: " + name);
}

std::string window_name(WindowType w) {
  switch (w) {
    case WindowType::kHann:
      return "hann";
    case WindowType::kHamming:
      return "hamming";
    case WindowType::kRectangular:
      return "rect";
  }
  return "hann";
}

std::vector<double> make_window(WindowType type, int length) {
  std::vector<double> w(static_cast<std::size_t>(length), 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int t = 0; t < length; ++t) {
    const double c = std::cos(two_pi * t / length);
    switch (type) {
      case WindowType::kHann:
        w[t] = 0.5 - 0.5 * c;
        break;
      case WindowType::kHamming:
        w[t] = 0.54 - 0.46 * c;
        break;
      case WindowType::kRectangular:
        break;
    }
  }
  return w;
}

int StftConfig::frame_samples() const {
  return static_cast<int>(std::lround(frame_length_ms * 1e-3 * sample_rate));
}

int StftConfig::shift_samples() const {
  return static_cast<int>(std::lround(frame_shift_ms * 1e-3 * sample_rate));
}

void StftConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("stft: sample_rate must be positive");
  if (frame_samples() <= 0 || shift_samples() <= 0) {
    throw ConfigError("stft: frame length and shift must be positive");
  }
  if (fft_size < frame_samples()) {
    throw ConfigError("stft: fft_size " + std::to_string(fft_size) +
                      " is smaller than the frame (" +
                      std::to_string(frame_samples()) + " samples)");
  }
  if (fft_size % 2 != 0) throw ConfigError("stft: fft_size must be even");
}

StftConfig StftConfig::with_fft(int fft_size) {
  StftConfig c;
  c.fft_size = fft_size;
  return c;
}

int num_frames(std::size_t length, const StftConfig& cfg) {
  const auto shift = static_cast<std::size_t>(cfg.shift_samples());
  return static_cast<int>((length + shift - 1) / shift);
}

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  validate(w);
  if (w.empty()) throw ShapeError("stft: empty waveform");
  if (w.sample_rate != cfg.sample_rate) {
    throw ConfigError("stft: waveform rate " + std::to_string(w.sample_rate) +
                      " Hz does not match config rate " +
                      std::to_string(cfg.sample_rate) + " Hz");
  }
  const int frame = cfg.frame_samples();
  const int shift = cfg.shift_samples();
  const int n_frames = num_frames(w.size(), cfg);
  const std::vector<double> window = make_window(cfg.window, frame);

  ComplexSpectrogram s;
  s.config = cfg;
  s.signal_length = w.size();
  s.frames.resize(n_frames, cfg.bins());
  std::vector<double> buf(static_cast<std::size_t>(frame));
  for (int n = 0; n < n_frames; ++n) {
    const std::size_t start = static_cast<std::size_t>(n) * shift;
    for (int t = 0; t < frame; ++t) {
      const std::size_t i = start + t;
      buf[t] = i < w.size() ? window[t] * w.samples[i] : 0.0;
    }
    const std::vector<Complex> spec = rfft(buf, cfg.fft_size);
    for (int k = 0; k < cfg.bins(); ++k) s.frames(n, k) = spec[k];
  }
  return s;
}

Waveform istfs(const ComplexSpectrogram& s) {
  const std::size_t full =
      s.num_frames() > 0
          ? static_cast<std::size_t>(s.num_frames() - 1) *
                    s.config.shift_samples() +
                s.config.frame_samples()
          : 0;
  return istfs(s, s.signal_length.value_or(full));
}

Waveform istfs(const ComplexSpectrogram& s, std::size_t length) {
  const StftConfig& cfg = s.config;
  cfg.validate();
  if (s.num_frames() < 1) throw ShapeError("istfs: spectrogram has no frames");
  if (s.num_bins() != cfg.bins()) {
    throw ShapeError("istfs: spectrogram has " + std::to_string(s.num_bins()) +
                     " bins, config implies " + std::to_string(cfg.bins()));
  }
  const int frame = cfg.frame_samples();
  const int shift = cfg.shift_samples();
  const std::vector<double> window = make_window(cfg.window, frame);

  // Every sample position modulo the shift must see some window energy.
  if (shift > frame) {
    throw ConfigError("istfs: frame shift exceeds frame length");
  }
  for (int t = 0; t < shift; ++t) {
    double acc = 0.0;
    for (int m = t; m < frame; m += shift) acc += window[m] * window[m];
    if (acc <= 0.0) {
      throw ConfigError(
          "istfs: squared window sum vanishes; configuration is degenerate");
    }
  }

  const int n_frames = s.num_frames();
  const std::size_t total =
      static_cast<std::size_t>(n_frames - 1) * shift + frame;
  std::vector<double> out(total, 0.0);
  std::vector<double> den(total, 0.0);
  std::vector<Complex> row(static_cast<std::size_t>(cfg.bins()));
  for (int n = 0; n < n_frames; ++n) {
    for (int k = 0; k < cfg.bins(); ++k) row[k] = s.frames(n, k);
    const std::vector<double> y = irfft(row, cfg.fft_size);
    const std::size_t start = static_cast<std::size_t>(n) * shift;
    for (int t = 0; t < frame; ++t) {
      out[start + t] += window[t] * y[t];
      den[start + t] += window[t] * window[t];
    }
  }
  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.assign(length, 0.0);
  const std::size_t m = std::min(length, total);
  for (std::size_t i = 0; i < m; ++i) {
    w.samples[i] = out[i] / std::max(den[i], 1e-8);
  }
  return w;
}

Las las_of(const ComplexSpectrogram& s) {
  Las l;
  l.config = s.config;
  l.values.resize(s.frames.rows(), s.frames.cols());
  for (Eigen::Index i = 0; i < s.frames.size(); ++i) {
    l.values.data()[i] =
        std::log(std::max(std::abs(s.frames.data()[i]), kAmpFloor));
  }
  return l;
}

Las las_of(const Waveform& w, const StftConfig& cfg) {
  return las_of(stft(w, cfg));
}

}  // namespace dnr::signal
