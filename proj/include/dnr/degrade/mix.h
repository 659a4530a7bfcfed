// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_DEGRADE_MIX_H_
#define DNR_DEGRADE_MIX_H_

#include <cstddef>
#include <vector>

#include "dnr/signal/waveform.h"

namespace dnr::degrade {

// 10 log10(P_signal / P_noise).
double snr_db(const std::vector<double>& signal, const std::vector<double>& noise);

// Noise of exactly `length` samples read cyclically from `offset`.
std::vector<double> fit_noise(const std::vector<double>& noise,
                              std::size_t length, std::size_t offset);

struct Mixture {
  signal::Waveform mixed;
  // mixed - signal, i.e. the noise as it is present in the mixture.
  signal::Waveform scaled_noise;
  double noise_gain = 1.0;
};

// Scales noise so that the mixture has the requested SNR with respect to
// signal. Noise is tiled cyclically starting at offset when needed.
Mixture mix_at_snr(const signal::Waveform& signal, const signal::Waveform& noise,
                   double target_snr_db, std::size_t offset = 0);

}  // namespace dnr::degrade

#endif  // DNR_DEGRADE_MIX_H_
