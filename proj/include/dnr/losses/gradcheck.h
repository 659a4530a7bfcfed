// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_LOSSES_GRADCHECK_H_
#define DNR_LOSSES_GRADCHECK_H_

#include <cstdint>
#include <vector>

#include "dnr/nn/gradcheck.h"

namespace dnr::losses {

// Finite-difference verification of every loss and of the WGAN-GP critic
// losses (including the gradient penalty) at random points drawn from seed.
std::vector<nn::NamedGradCheck> loss_gradient_suite(std::uint64_t seed);

}  // namespace dnr::losses

#endif  // DNR_LOSSES_GRADCHECK_H_
