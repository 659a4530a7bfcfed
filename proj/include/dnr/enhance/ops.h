// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_ENHANCE_OPS_H_
#define DNR_ENHANCE_OPS_H_

#include "dnr/nn/autograd.h"

namespace dnr::enhance {

// Differentiable counterparts of rir_magnitude and initial_denoise_dereverb.

// r: FN taps (any shape with FN elements) -> [FN/2 + 1].
nn::Var rir_magnitude_op(const nn::Var& r);

// l_nr, noise_las: [N, K]; r_mag: [K]; alpha: one element.
// Floored bins pass no gradient.
nn::Var initial_denoise_op(const nn::Var& l_nr, const nn::Var& r_mag,
                           const nn::Var& noise_las, const nn::Var& alpha);

}  // namespace dnr::enhance

#endif  // DNR_ENHANCE_OPS_H_
