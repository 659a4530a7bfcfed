// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/degrade/mix.h"

#include <cmath>

#include "dnr/common/error.h"

namespace dnr::degrade {

double snr_db(const std::vector<double>& signal, const std::vector<double>& noise) {
  return 10.0 * std::log10(signal::mean_power(signal) / signal::mean_power(noise));
}

std::vector<double> fit_noise(const std::vector<double>& noise,
                              std::size_t length, std::size_t offset) {
  if (noise.empty()) throw ConfigError("empty noise signal");
  std::vector<double> out(length);
  std::size_t j = offset % noise.size();
  for (std::size_t t = 0; t < length; ++t) {
    out[t] = noise[j];
    if (++j == noise.size()) j = 0;
  }
  return out;
}

Mixture mix_at_snr(const signal::Waveform& sig, const signal::Waveform& noise,
                   double target_snr_db, std::size_t offset) {
  signal::validate(sig, "signal");
  signal::validate(noise, "noise");
  signal::require_same_rate(sig, noise);
  if (!std::isfinite(target_snr_db)) throw ConfigError("SNR must be finite");
  const double ps = signal::mean_power(sig.samples);
  if (ps <= 0.0) throw NumericError("cannot mix at an SNR: signal is silent");
  const std::vector<double> n = fit_noise(noise.samples, sig.size(), offset);
  const double pn = signal::mean_power(n);
  if (pn <= 0.0) throw NumericError("cannot mix at an SNR: noise is silent");
  Mixture m;
  m.noise_gain = std::sqrt(ps / (pn * std::pow(10.0, target_snr_db / 10.0)));
  m.mixed = sig;
  m.scaled_noise.sample_rate = sig.sample_rate;
  m.scaled_noise.samples.resize(sig.size());
  for (std::size_t t = 0; t < sig.size(); ++t) {
    m.mixed.samples[t] = sig.samples[t] + m.noise_gain * n[t];
    m.scaled_noise.samples[t] = m.mixed.samples[t] - sig.samples[t];
  }
  return m;
}

}  // namespace dnr::degrade
