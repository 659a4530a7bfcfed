// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_METRICS_METRICS_H_
#define DNR_METRICS_METRICS_H_

#include <vector>

#include "dnr/signal/waveform.h"

namespace dnr::metrics {

// Short-time objective intelligibility at 10 kHz: 15 one-third octave bands
// from 150 Hz, 30-frame (384 ms) segments, clipping at -15 dB SDR, frames
// more than 40 dB below the loudest clean frame removed.
double stoi(const signal::Waveform& clean, const signal::Waveform& processed);

// sqrt(mean over frames and bins of (20 log10 |X| - 20 log10 |Y|)^2) with
// amplitudes floored at amp_floor, 2048-point analysis.
double log_spectral_distance(const signal::Waveform& clean,
                             const signal::Waveform& processed);

inline constexpr double kSegSnrMin = -10.0;
inline constexpr double kSegSnrMax = 35.0;

// Mean over non-overlapping 30 ms segments of the clamped per-segment SNR.
double segmental_snr(const signal::Waveform& clean, const signal::Waveform& processed);

// Polyphase rational resampler (Kaiser-windowed sinc).
std::vector<double> resample(const std::vector<double>& x, int up, int down);

}  // namespace dnr::metrics

#endif  // DNR_METRICS_METRICS_H_
