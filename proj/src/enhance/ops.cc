// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/enhance/ops.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

#include "dnr/common/error.h"
#include "dnr/enhance/spectral.h"
#include "dnr/signal/fft.h"
#include "dnr/signal/stft.h"
#include "denoise_bin.h"

namespace dnr::enhance {

using nn::Tensor;
using nn::Var;

Var rir_magnitude_op(const Var& r) {
  const std::size_t fn = r.value().size();
  if (fn < 2 || fn % 2 != 0) {
    throw ShapeError("RIR magnitude needs an even tap count, got " + std::to_string(fn));
  }
  auto spec = std::make_shared<std::vector<signal::Complex>>(
      signal::rfft(r.value().values(), fn));
  const std::size_t k = spec->size();
  Tensor out({static_cast<std::int64_t>(k)});
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::abs((*spec)[i]);
    if (out[i] > out[argmax]) argmax = i;
  }
  const double floor = kRirFloorRatio * out[argmax];
  if (!(floor > 0.0)) throw NumericError("RIR magnitude of an all-zero response");
  auto clamped = std::make_shared<std::vector<bool>>(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    if (out[i] < floor) {
      out[i] = floor;
      (*clamped)[i] = true;
    }
  }
  return nn::make_result(
      std::move(out), {r}, "rir_magnitude",
      [r, spec, clamped, argmax, fn](const Tensor& g, const Tensor&) {
        const std::size_t k = spec->size();
        std::vector<signal::Complex> c(k);
        double to_max = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          if ((*clamped)[i]) {
            to_max += kRirFloorRatio * g[i];
          }
        }
        for (std::size_t i = 0; i < k; ++i) {
          double gi = (*clamped)[i] ? 0.0 : g[i];
          if (i == argmax) gi += to_max;
          const double a = std::abs((*spec)[i]);
          if (gi != 0.0 && a > 0.0) c[i] = gi * (*spec)[i] / a;
        }
        // d|X_k|/dr_t = Re(X_k e^{+i w k t}) / |X_k|.
        std::vector<double> dr = signal::half_spectrum_synthesis(c, fn);
        accumulate_grad(r, Tensor(r.shape(), std::move(dr)));
      });
}

Var initial_denoise_op(const Var& l_nr, const Var& r_mag, const Var& noise_las,
                       const Var& alpha) {
  const Tensor& l = l_nr.value();
  const Tensor& ne = noise_las.value();
  const Tensor& rm = r_mag.value();
  if (l.rank() != 2 || l.shape() != ne.shape() ||
      static_cast<std::int64_t>(rm.size()) != l.dim(1) || alpha.value().size() != 1) {
    throw ShapeError("initial denoise: LAS " + nn::shape_str(l.shape()) +
                     ", RIR magnitude " + nn::shape_str(rm.shape()) + ", noise " +
                     nn::shape_str(ne.shape()) + ", alpha " +
                     nn::shape_str(alpha.shape()) + " in " + nn::current_scope());
  }
  if (!(alpha.value()[0] >= 0.0)) {
    throw NumericError("noise weight alpha must be nonnegative in " + nn::current_scope());
  }
  const std::int64_t n = l.dim(0), k = l.dim(1);
  auto log_r = std::make_shared<std::vector<double>>(static_cast<std::size_t>(k));
  for (std::int64_t j = 0; j < k; ++j) {
    if (!(rm[j] > 0.0)) throw NumericError("RIR magnitude must be positive");
    (*log_r)[j] = std::log(rm[j]);
  }
  const double a = alpha.value()[0];
  Tensor out(l.shape());
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < k; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i * k + j);
      out[idx] = internal::denoise_bin(l[idx], (*log_r)[j], a, ne[idx]).value;
    }
  }
  return nn::make_result(
      std::move(out), {l_nr, r_mag, noise_las, alpha}, "initial_denoise",
      [l_nr, r_mag, noise_las, alpha, log_r, n, k](const Tensor& g, const Tensor&) {
        const Tensor& l = l_nr.value();
        const Tensor& ne = noise_las.value();
        const Tensor& rm = r_mag.value();
        const double a = alpha.value()[0];
        Tensor dl(l.shape()), dne(l.shape()), drm(rm.shape()), da({1});
        for (std::int64_t i = 0; i < n; ++i) {
          for (std::int64_t j = 0; j < k; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i * k + j);
            const auto bin = internal::denoise_bin(l[idx], (*log_r)[j], a, ne[idx]);
            if (bin.floored) continue;
            // y = A + log(1 - rho), rho = alpha exp(ne - A), A = l - ln R.
            const double inv = g[idx] / (1.0 - bin.ratio);
            dl[idx] = inv;
            drm[j] -= inv / rm[j];
            dne[idx] = -inv * bin.ratio;
            da[0] -= inv * std::exp(ne[idx] - (l[idx] - (*log_r)[j]));
          }
        }
        accumulate_grad(l_nr, std::move(dl));
        accumulate_grad(r_mag, std::move(drm));
        accumulate_grad(noise_las, std::move(dne));
        accumulate_grad(alpha, std::move(da));
      });
}

}  // namespace dnr::enhance
