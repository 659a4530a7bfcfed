// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/signal/waveform.h"

#include <algorithm>
#include <cmath>

#include "dnr/common/error.h"

namespace dnr::signal {

void validate(const Waveform& w, const std::string& what) {
  if (w.sample_rate <= 0) {
    throw ConfigError(what + ": sample rate must be positive, got " +
                      std::to_string(w.sample_rate));
  }
  for (double v : w.samples) {
    if (!std::isfinite(v)) throw NumericError(what + ": non-finite sample");
  }
}

void require_same_rate(const Waveform& a, const Waveform& b) {
  if (a.sample_rate != b.sample_rate) {
    throw ConfigError("sample rate mismatch: " + std::to_string(a.sample_rate) +
                      " Hz vs " + std::to_string(b.sample_rate) + " Hz");
  }
}

double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double peak_abs(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

}  // namespace dnr::signal
