// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_ENHANCE_SPECTRAL_H_
#define DNR_ENHANCE_SPECTRAL_H_

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dnr/degrade/rir.h"
#include "dnr/signal/stft.h"

namespace dnr::enhance {

// RIR magnitudes are clamped to this fraction of their maximum.
inline constexpr double kRirFloorRatio = 1e-3;

struct BandLayout {
  int k_nb = 341;
  int k_full = 1025;
  int k_fine = 4097;

  int high_bins() const { return k_full - k_nb + 1; }
};

struct NoiseEstimate {
  signal::Las noise_las;
  double alpha = 0.0;
};

struct RirMagnitude {
  std::vector<double> r_mag;
};

// |FFT_FN(r)| over the FN/2+1 non-negative bins, clamped from below.
RirMagnitude rir_magnitude(const degrade::Rir& r);

// ln(max(exp(L^NR)/R_k - alpha exp(L^NE), amp_floor)) per bin.
signal::Las initial_denoise_dereverb(const signal::Las& l_nr,
                                     const RirMagnitude& rm,
                                     const NoiseEstimate& ne);

// Narrow band: bins [0, k_nb). High band: bins [k_nb - 1, k_full).
std::pair<signal::Las, signal::Las> band_split(const signal::Las& l,
                                               const BandLayout& layout = {});
// The shared bin is taken from the narrow band.
signal::Las band_merge(const signal::Las& narrow, const signal::Las& high,
                       const BandLayout& layout = {});

// Linear interpolation along frequency from k_full to k_fine bins.
signal::Las fre_upsample_reference(const signal::Las& l,
                                   const BandLayout& layout = {});

struct GriffinLimOptions {
  int iters = 60;
  std::uint64_t seed = 0;
};

// Iterative phase recovery for magnitudes exp(l). The optional trace
// receives the spectral convergence ||  |X| - A || / ||A|| before each
// projection, iters + 1 values in total.
signal::ComplexSpectrogram griffin_lim_phase(const signal::Las& l,
                                             const GriffinLimOptions& options = {},
                                             std::vector<double>* sc_trace = nullptr);

enum class PhaseSource { kNoisy, kGriffinLim };

// Combines exp(l) with a phase and synthesizes. With kNoisy the phase is
// taken from the STFT of `noisy` at l's resolution; the output length is
// that of `noisy` when given.
signal::Waveform reconstruct(const signal::Las& l, PhaseSource source,
                             const signal::Waveform* noisy = nullptr,
                             const GriffinLimOptions& options = {});

}  // namespace dnr::enhance

#endif  // DNR_ENHANCE_SPECTRAL_H_
