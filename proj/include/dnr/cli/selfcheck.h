// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_CLI_SELFCHECK_H_
#define DNR_CLI_SELFCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace dnr::cli {

struct CheckResult {
  std::string name;
  double value = 0.0;  // worst observed error
  double tolerance = 0.0;
  bool passed() const { return value < tolerance; }
};

// Gradient checks of every primitive and loss over `gradient_seeds` seeds,
// STFT/STFS round trip, the initial denoise-dereverb inverse and loss minima.
std::vector<CheckResult> selfcheck(std::uint64_t seed, int gradient_seeds = 10);

}  // namespace dnr::cli

#endif  // DNR_CLI_SELFCHECK_H_
