// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/cli/image.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dnr/common/error.h"

namespace dnr::cli {

std::string las_pgm(const signal::Las& las, double range_nats) {
  const int w = las.num_frames(), h = las.num_bins();
  if (w == 0 || h == 0) throw ShapeError("cannot draw an empty LAS");
  const double top = las.values.maxCoeff();
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(w) * h);
  for (int k = h - 1; k >= 0; --k) {
    for (int n = 0; n < w; ++n) {
      const double t = std::clamp(1.0 - (top - las.values(n, k)) / range_nats, 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  }
  return out;
}

void write_las_pgm(const std::filesystem::path& path, const signal::Las& las) {
  const std::string data = las_pgm(las);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dnr::cli
