// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_NN_ADAM_H_
#define DNR_NN_ADAM_H_

#include <cstdint>
#include <vector>

#include "dnr/nn/autograd.h"

namespace dnr::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Round parameters to float32 after each update so that a saved weight
  // file reproduces the live parameters exactly.
  bool round_to_float32 = false;
};

class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions options);

  // Applies one update from the accumulated gradients. Parameters without a
  // gradient are treated as having a zero gradient.
  void step();
  void zero_grad();

  std::int64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  std::vector<Var> params_;
  AdamOptions options_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace dnr::nn

#endif  // DNR_NN_ADAM_H_
