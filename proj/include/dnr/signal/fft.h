// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_SIGNAL_FFT_H_
#define DNR_SIGNAL_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dnr::signal {

using Complex = std::complex<double>;

// Real-input DFT of `x` zero-padded (or truncated) to `n` points; returns the
// n/2+1 non-negative-frequency bins. Backed by FFTW with cached plans, safe
// to call from multiple threads.
std::vector<Complex> rfft(std::span<const double> x, std::size_t n);

std::size_t next_pow2(std::size_t n);

// Inverse of rfft: returns n real samples, normalized by 1/n.
std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n);

// Unnormalized Hermitian synthesis: out[t] = Re(sum_{k=0}^{n/2} c_k e^{+2 pi i k t / n})
// treating every bin once. Used for adjoints of rfft.
std::vector<double> half_spectrum_synthesis(std::span<const Complex> c,
                                            std::size_t n);

// Linear convolution of x with h, truncated to len(x). FFT based.
std::vector<double> convolve_truncated(std::span<const double> x,
                                       std::span<const double> h);

// out[i] = sum_s a[s] * g[s + i] for i in [0, out_len), with g zero beyond
// its end. With a = x this is the adjoint of convolve_truncated(x, h) with
// respect to h; with a = h it is the adjoint with respect to x.
std::vector<double> correlate_truncated(std::span<const double> g,
                                        std::span<const double> a,
                                        std::size_t out_len);

}  // namespace dnr::signal

#endif  // DNR_SIGNAL_FFT_H_
