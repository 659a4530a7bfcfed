// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_LOSSES_WGAN_H_
#define DNR_LOSSES_WGAN_H_

#include <string>
#include <vector>

#include "dnr/common/random.h"
#include "dnr/nn/autograd.h"
#include "dnr/nn/param_store.h"

namespace dnr::losses {

// A scalar-valued critic over one [N, K] sample. input_gradient returns
// d score / d x as a graph that is itself differentiable in the critic
// parameters, which the gradient penalty needs.
class Critic {
 public:
  virtual ~Critic() = default;
  virtual nn::Var score(const nn::Var& x) const = 0;
  virtual nn::Var input_gradient(const nn::Var& x) const = 0;
  virtual std::vector<nn::Var> parameters() const = 0;
};

// score = sum(w * x).
class LinearCritic : public Critic {
 public:
  explicit LinearCritic(nn::Var w) : w_(std::move(w)) {}
  nn::Var score(const nn::Var& x) const override;
  nn::Var input_gradient(const nn::Var& x) const override;
  std::vector<nn::Var> parameters() const override { return {w_}; }

 private:
  nn::Var w_;
};

enum class CriticAxis { kTime, kFrequency };

// Stack of 1-D convolutions with leaky ReLU between layers and a final
// one-channel convolution averaged into a scalar. kTime convolves along
// frames with the K bins as channels; kFrequency convolves along bins of
// each frame with one input channel.
class ConvCritic : public Critic {
 public:
  ConvCritic(nn::ParamStore& store, const std::string& name, CriticAxis axis,
             std::int64_t bins, const std::vector<std::int64_t>& channels,
             std::int64_t taps, Rng& rng, double slope = 0.2);
  nn::Var score(const nn::Var& x) const override;
  nn::Var input_gradient(const nn::Var& x) const override;
  std::vector<nn::Var> parameters() const override;

  CriticAxis axis() const { return axis_; }
  // Every layer's output before its leaky ReLU; the last one is the score map.
  std::vector<nn::Var> pre_activations(const nn::Var& x) const;

 private:
  nn::Var to_input(const nn::Var& x) const;

  CriticAxis axis_;
  std::int64_t bins_;
  double slope_;
  std::vector<nn::Var> weights_;
  std::vector<nn::Var> biases_;
};

struct WganDTerms {
  nn::Var loss;         // mean(d(fake)) - mean(d(real)) + gamma * penalty
  double wasserstein;   // mean(d(real)) - mean(d(fake))
  double penalty;       // mean((|grad d(x_hat)| - 1)^2)
};

// x_hat_i = eps_i * real_i + (1 - eps_i) * fake_i. Samples are constants:
// only the critic parameters receive gradients.
WganDTerms wgan_gp_d_loss(const Critic& critic, const std::vector<nn::Tensor>& real,
                          const std::vector<nn::Tensor>& fake, double gamma,
                          const std::vector<double>& eps);
// eps_i ~ U[0, 1).
WganDTerms wgan_gp_d_loss(const Critic& critic, const std::vector<nn::Tensor>& real,
                          const std::vector<nn::Tensor>& fake, double gamma, Rng& rng);

// -mean(d(fake)); differentiable in the fakes.
nn::Var wgan_g_loss(const Critic& critic, const std::vector<nn::Var>& fake);

}  // namespace dnr::losses

#endif  // DNR_LOSSES_WGAN_H_
