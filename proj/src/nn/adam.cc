// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/nn/adam.h"

#include <cmath>

#include "dnr/common/error.h"

namespace dnr::nn {

Adam::Adam(std::vector<Var> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Var& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void Adam::step() {
  for (const Var& p : params_) {
    if (p.has_grad() && !p.grad().all_finite()) {
      throw NumericError("non-finite gradient for parameter " + p.name());
    }
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var p = params_[i];
    const bool has = p.has_grad();
    const Tensor g = has ? p.grad() : Tensor();
    Tensor& w = p.mutable_value();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = has ? g[j] : 0.0;
      m[j] = b1 * m[j] + (1.0 - b1) * gj;
      v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
      const double mh = m[j] / c1;
      const double vh = v[j] / c2;
      w[j] -= options_.lr * mh / (std::sqrt(vh) + options_.eps);
      if (options_.round_to_float32) w[j] = static_cast<float>(w[j]);
    }
  }
}

void Adam::zero_grad() {
  for (Var& p : params_) p.zero_grad();
}

}  // namespace dnr::nn
