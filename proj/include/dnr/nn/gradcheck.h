// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_NN_GRADCHECK_H_
#define DNR_NN_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dnr/nn/autograd.h"

namespace dnr::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_input;
};

// Compares reverse-mode gradients of the scalar f() with respect to each
// input against central differences. Per input the error is
// |analytic - numeric|_2 / max(|analytic|_2, |numeric|_2, floor).
GradCheckResult check_gradients(const std::function<Var()>& f,
                                const std::vector<Var>& inputs,
                                double step = 1e-6, double floor = 1e-10);

struct NamedGradCheck {
  std::string name;
  GradCheckResult result;
};

// Finite-difference verification of every kernel primitive and layer kind
// at random points drawn from seed.
std::vector<NamedGradCheck> primitive_gradient_suite(std::uint64_t seed);

}  // namespace dnr::nn

#endif  // DNR_NN_GRADCHECK_H_
