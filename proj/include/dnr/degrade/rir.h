// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_DEGRADE_RIR_H_
#define DNR_DEGRADE_RIR_H_

#include <vector>

#include "dnr/signal/waveform.h"

namespace dnr::degrade {

inline constexpr int kRirLength = 2048;

struct Rir {
  std::vector<double> taps;  // exactly kRirLength
  int sample_rate = signal::kDefaultSampleRate;
};

// Truncates or zero-pads to kRirLength and validates.
Rir make_rir(std::vector<double> taps,
             int sample_rate = signal::kDefaultSampleRate);
Rir unit_impulse(int delay = 0, double amplitude = 1.0);

// Throws ConfigError on wrong length or rate, NumericError on non-finite or
// all-zero taps.
void validate(const Rir& rir);

// Linear convolution truncated to the input length.
signal::Waveform convolve_rir(const signal::Waveform& x, const Rir& rir);

struct RirOutput {
  signal::Waveform audio;
  double gain = 1.0;  // applied only when the convolution would clip
};

// convolve_rir followed by peak normalization to 1 when |out| > 1.
RirOutput apply_rir(const signal::Waveform& clean, const Rir& rir);

}  // namespace dnr::degrade

#endif  // DNR_DEGRADE_RIR_H_
