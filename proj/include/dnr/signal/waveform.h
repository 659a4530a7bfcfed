// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_SIGNAL_WAVEFORM_H_
#define DNR_SIGNAL_WAVEFORM_H_

#include <cstddef>
#include <string>
#include <vector>

namespace dnr::signal {

inline constexpr int kDefaultSampleRate = 24000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws ConfigError for a non-positive rate, NumericError for NaN/Inf.
void validate(const Waveform& w, const std::string& what = "waveform");

// Binary operations reject mixed sample rates.
void require_same_rate(const Waveform& a, const Waveform& b);

double mean_power(const std::vector<double>& x);
double peak_abs(const std::vector<double>& x);

}  // namespace dnr::signal

#endif  // DNR_SIGNAL_WAVEFORM_H_
