// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_SIGNAL_STFT_H_
#define DNR_SIGNAL_STFT_H_

#include <optional>
#include <string>
#include <vector>

#include "dnr/common/matrix.h"
#include "dnr/signal/waveform.h"

namespace dnr::signal {

// Linear amplitude floor applied before every logarithm in the pipeline.
inline constexpr double kAmpFloor = 1e-5;

enum class WindowType { kHann, kHamming, kRectangular };

WindowType parse_window(const std::string& name);
std::string window_name(WindowType w);

// Periodic window of `length` samples.
std::vector<double> make_window(WindowType type, int length);

struct StftConfig {
  int sample_rate = kDefaultSampleRate;
  double frame_length_ms = 50.0;
  double frame_shift_ms = 12.0;
  int fft_size = 2048;
  WindowType window = WindowType::kHann;

  int frame_samples() const;
  int shift_samples() const;
  int bins() const { return fft_size / 2 + 1; }
  // Throws ConfigError on non-positive sizes or fft_size < frame_samples().
  void validate() const;

  static StftConfig with_fft(int fft_size);

  bool operator==(const StftConfig&) const = default;
};

// Number of analysis frames for a signal of `length` samples: the signal is
// zero-padded at its tail so every sample is covered.
int num_frames(std::size_t length, const StftConfig& cfg);

struct ComplexSpectrogram {
  ComplexMatrix frames;  // N x K
  StftConfig config;
  // Length of the analysed signal, when known; istfs truncates to it.
  std::optional<std::size_t> signal_length;

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int num_bins() const { return static_cast<int>(frames.cols()); }
};

// Log-amplitude spectra: natural log of bin magnitudes, floored at kAmpFloor.
struct Las {
  Matrix values;  // N x K
  StftConfig config;

  int num_frames() const { return static_cast<int>(values.rows()); }
  int num_bins() const { return static_cast<int>(values.cols()); }
};

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg);

// Weighted overlap-add with squared-window normalization.
Waveform istfs(const ComplexSpectrogram& s);
// Same, with an explicit output length (overrides s.signal_length).
Waveform istfs(const ComplexSpectrogram& s, std::size_t length);

Las las_of(const ComplexSpectrogram& s);
Las las_of(const Waveform& w, const StftConfig& cfg);

}  // namespace dnr::signal

#endif  // DNR_SIGNAL_STFT_H_
