// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_ENHANCE_DENOISE_BIN_H_
#define DNR_ENHANCE_DENOISE_BIN_H_

#include <algorithm>
#include <cmath>

#include "dnr/signal/stft.h"

namespace dnr::enhance::internal {

struct DenoiseBin {
  double value;    // floored log amplitude
  bool floored;
  double ratio;    // alpha exp(ne) / (exp(l) / R), valid when not floored
};

// ln(max(exp(l)/R - alpha exp(ne), floor)) evaluated as
// A + log1p(-exp(B - A)) with A = l - ln R, B = ln alpha + ne, so large
// finite inputs cannot overflow.
inline DenoiseBin denoise_bin(double l, double log_r, double alpha, double ne) {
  static const double kLogFloor = std::log(signal::kAmpFloor);
  const double a = l - log_r;
  double y = a, ratio = 0.0;
  if (alpha > 0.0) {
    const double d = std::log(alpha) + ne - a;
    if (d >= 0.0) return {kLogFloor, true, 0.0};
    ratio = std::exp(d);
    y = a + std::log1p(-ratio);
  }
  if (y <= kLogFloor) return {kLogFloor, true, 0.0};
  return {y, false, ratio};
}

}  // namespace dnr::enhance::internal

#endif  // DNR_ENHANCE_DENOISE_BIN_H_
