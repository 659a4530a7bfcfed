// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_LOSSES_LOSSES_H_
#define DNR_LOSSES_LOSSES_H_

#include <span>
#include <vector>

#include "dnr/degrade/rir.h"
#include "dnr/nn/autograd.h"
#include "dnr/signal/stft.h"

namespace dnr::losses {

struct StftScale {
  int fft;
  int shift;
  int frame;
};

std::vector<StftScale> default_stft_scales();

struct LossWeights {
  double lambda_c = 500.0;
  double gp_gamma = 10.0;
  std::vector<StftScale> stft_scales = default_stft_scales();

  void validate() const;
};

// (1 / NK) sum (target - pred)^2.
double mse_las(const signal::Las& target, const signal::Las& pred);
nn::Var mse(const nn::Var& target, const nn::Var& pred);

// Negative Pearson correlation; NumericError on zero variance.
double neg_correlation(std::span<const double> r, std::span<const double> r_hat);
double neg_correlation(const degrade::Rir& r, const degrade::Rir& r_hat);
nn::Var neg_correlation(const nn::Var& r, const nn::Var& r_hat);

// Mean over scales of spectral convergence ||X| - |Y||_F / ||X||_F plus
// mean |ln |X| - ln |Y|| (magnitudes floored at amp_floor). x is the
// reference. Frames use a symmetric Hann window and equal zero padding on
// both ends, so the loss is invariant to reversing both inputs.
double multiscale_stft_loss(const std::vector<double>& x,
                            const std::vector<double>& y,
                            const std::vector<StftScale>& scales = default_stft_scales());
double multiscale_stft_loss(const signal::Waveform& x, const signal::Waveform& y,
                            const std::vector<StftScale>& scales = default_stft_scales());
// Differentiable in y.
nn::Var multiscale_stft_loss(const std::vector<double>& x, const nn::Var& y,
                             const std::vector<StftScale>& scales = default_stft_scales());

// x (constant) convolved with h, truncated to len(x). Differentiable in h.
nn::Var convolve(const std::vector<double>& x, const nn::Var& h);

// Multi-scale STFT loss between the natural noisy-reverberant waveform and
// the reverberation-free noisy waveform convolved with r_hat.
double l_rs(const signal::Waveform& noisy_reverberant, const signal::Waveform& noisy,
            const degrade::Rir& r_hat,
            const std::vector<StftScale>& scales = default_stft_scales());
nn::Var l_rs(const std::vector<double>& noisy_reverberant,
             const std::vector<double>& noisy, const nn::Var& r_hat,
             const std::vector<StftScale>& scales = default_stft_scales());

}  // namespace dnr::losses

#endif  // DNR_LOSSES_LOSSES_H_
