// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_CLI_IMAGE_H_
#define DNR_CLI_IMAGE_H_

#include <cstdint>
#include <filesystem>
#include <string>

#include "dnr/signal/stft.h"

namespace dnr::cli {

// Binary 8-bit PGM: one column per frame, low frequencies at the bottom.
// The top `range_nats` below the maximum map to 0..255.
std::string las_pgm(const signal::Las& las, double range_nats = 9.21);
void write_las_pgm(const std::filesystem::path& path, const signal::Las& las);

}  // namespace dnr::cli

#endif  // DNR_CLI_IMAGE_H_
