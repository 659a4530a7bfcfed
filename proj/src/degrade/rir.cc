// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/degrade/rir.h"

#include <cmath>

#include "dnr/common/error.h"
#include "dnr/signal/fft.h"

namespace dnr::degrade {

Rir make_rir(std::vector<double> taps, int sample_rate) {
  taps.resize(kRirLength, 0.0);
  Rir r{std::move(taps), sample_rate};
  validate(r);
  return r;
}

Rir unit_impulse(int delay, double amplitude) {
  if (delay < 0 || delay >= kRirLength) {
    throw ConfigError("impulse delay out of range: " + std::to_string(delay));
  }
  std::vector<double> taps(kRirLength, 0.0);
  taps[static_cast<std::size_t>(delay)] = amplitude;
  return make_rir(std::move(taps));
}

void validate(const Rir& rir) {
  if (rir.taps.size() != static_cast<std::size_t>(kRirLength)) {
    throw ConfigError("RIR must have " + std::to_string(kRirLength) +
                      " taps, got " + std::to_string(rir.taps.size()));
  }
  if (rir.sample_rate <= 0) throw ConfigError("RIR sample rate must be positive");
  bool nonzero = false;
  for (double v : rir.taps) {
    if (!std::isfinite(v)) throw NumericError("RIR contains non-finite taps");
    nonzero = nonzero || v != 0.0;
  }
  if (!nonzero) throw NumericError("RIR is all zeros");
}

signal::Waveform convolve_rir(const signal::Waveform& x, const Rir& rir) {
  signal::validate(x);
  validate(rir);
  if (x.sample_rate != rir.sample_rate) {
    throw ConfigError("sample rate mismatch: signal " +
                      std::to_string(x.sample_rate) + " Hz, RIR " +
                      std::to_string(rir.sample_rate) + " Hz");
  }
  return {signal::convolve_truncated(x.samples, rir.taps), x.sample_rate};
}

RirOutput apply_rir(const signal::Waveform& clean, const Rir& rir) {
  RirOutput out{convolve_rir(clean, rir), 1.0};
  const double peak = signal::peak_abs(out.audio.samples);
  if (peak > 1.0) {
    out.gain = 1.0 / peak;
    for (double& v : out.audio.samples) v *= out.gain;
  }
  return out;
}

}  // namespace dnr::degrade
