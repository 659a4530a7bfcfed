// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/signal/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include "dnr/common/error.h"

namespace dnr::signal {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwFree>;

RealBuffer alloc_real(std::size_t n) {
  return RealBuffer(fftw_alloc_real(n));
}
ComplexBuffer alloc_complex(std::size_t n) {
  return ComplexBuffer(fftw_alloc_complex(n));
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// Planning is not thread-safe in FFTW; execution with the new-array API is.
// All buffers come from fftw_malloc so alignment matches the planning arrays.
const PlanPair& plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  RealBuffer r = alloc_real(n);
  ComplexBuffer c = alloc_complex(n / 2 + 1);
  PlanPair p;
  const int ni = static_cast<int>(n);
  p.forward = fftw_plan_dft_r2c_1d(ni, r.get(), c.get(), FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(ni, c.get(), r.get(), FFTW_ESTIMATE);
  return cache.emplace(n, p).first->second;
}

void check_size(std::size_t n) {
  if (n == 0) throw ConfigError("fft size must be positive");
}

// Unnormalized c2r over a Hermitian half spectrum.
std::vector<double> c2r(std::span<const Complex> spectrum, std::size_t n) {
  const std::size_t bins = n / 2 + 1;
  if (spectrum.size() != bins) {
    throw ShapeError("inverse fft: expected " + std::to_string(bins) +
                     " bins, got " + std::to_string(spectrum.size()));
  }
  const PlanPair& plans = plans_for(n);
  ComplexBuffer in = alloc_complex(bins);
  RealBuffer out = alloc_real(n);
  for (std::size_t k = 0; k < bins; ++k) {
    in.get()[k][0] = spectrum[k].real();
    in.get()[k][1] = spectrum[k].imag();
  }
  fftw_execute_dft_c2r(plans.inverse, in.get(), out.get());
  return std::vector<double>(out.get(), out.get() + n);
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<Complex> rfft(std::span<const double> x, std::size_t n) {
  check_size(n);
  const PlanPair& plans = plans_for(n);
  RealBuffer in = alloc_real(n);
  ComplexBuffer out = alloc_complex(n / 2 + 1);
  const std::size_t m = std::min(n, x.size());
  std::copy_n(x.begin(), m, in.get());
  std::fill(in.get() + m, in.get() + n, 0.0);
  fftw_execute_dft_r2c(plans.forward, in.get(), out.get());
  std::vector<Complex> result(n / 2 + 1);
  for (std::size_t k = 0; k < result.size(); ++k) {
    result[k] = Complex(out.get()[k][0], out.get()[k][1]);
  }
  return result;
}

std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n) {
  check_size(n);
  std::vector<double> y = c2r(spectrum, n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : y) v *= scale;
  return y;
}

std::vector<double> half_spectrum_synthesis(std::span<const Complex> c,
                                            std::size_t n) {
  check_size(n);
  if (n % 2 != 0) throw ConfigError("half-spectrum synthesis needs even n");
  std::vector<Complex> y(c.begin(), c.end());
  // c2r counts interior bins twice (conjugate pair) and ignores the
  // imaginary parts of DC and Nyquist, which contribute nothing here.
  for (std::size_t k = 1; k + 1 < y.size(); ++k) y[k] *= 0.5;
  return c2r(y, n);
}

std::vector<double> convolve_truncated(std::span<const double> x,
                                       std::span<const double> h) {
  if (x.empty() || h.empty()) return std::vector<double>(x.size(), 0.0);
  const std::size_t n = next_pow2(x.size() + h.size() - 1);
  std::vector<Complex> xf = rfft(x, n);
  const std::vector<Complex> hf = rfft(h, n);
  for (std::size_t k = 0; k < xf.size(); ++k) xf[k] *= hf[k];
  std::vector<double> y = irfft(xf, n);
  y.resize(x.size());
  return y;
}

std::vector<double> correlate_truncated(std::span<const double> g,
                                        std::span<const double> a,
                                        std::size_t out_len) {
  if (g.empty() || a.empty() || out_len == 0) {
    return std::vector<double>(out_len, 0.0);
  }
  const std::size_t n = next_pow2(std::max(g.size(), a.size() + out_len));
  std::vector<Complex> gf = rfft(g, n);
  const std::vector<Complex> af = rfft(a, n);
  for (std::size_t k = 0; k < gf.size(); ++k) gf[k] *= std::conj(af[k]);
  std::vector<double> y = irfft(gf, n);
  y.resize(out_len);
  return y;
}

}  // namespace dnr::signal
