// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/losses/wgan.h"

#include "dnr/common/error.h"
#include "dnr/nn/layers.h"
#include "dnr/nn/ops.h"

namespace dnr::losses {

using nn::Tensor;
using nn::Var;

Var LinearCritic::score(const Var& x) const { return nn::sum(nn::mul(w_, x)); }

Var LinearCritic::input_gradient(const Var& x) const {
  if (x.shape() != w_.shape()) {
    throw ShapeError("LinearCritic: input " + nn::shape_str(x.shape()) + " vs weight " +
                     nn::shape_str(w_.shape()));
  }
  return w_;
}

ConvCritic::ConvCritic(nn::ParamStore& store, const std::string& name, CriticAxis axis,
                       std::int64_t bins, const std::vector<std::int64_t>& channels,
                       std::int64_t taps, Rng& rng, double slope)
    : axis_(axis), bins_(bins), slope_(slope) {
  if (bins <= 0 || taps <= 0 || taps % 2 == 0) {
    throw ConfigError("ConvCritic " + name + ": bins must be positive and taps odd");
  }
  std::int64_t cin = axis == CriticAxis::kTime ? bins : 1;
  std::vector<std::int64_t> widths = channels;
  widths.push_back(1);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::string base = name + "/conv" + std::to_string(l);
    const std::int64_t cout = widths[l];
    weights_.push_back(
        store.add(base + "/w", nn::glorot_uniform({taps, cin, cout}, taps * cin, taps * cout, rng)));
    biases_.push_back(store.add(base + "/b", Tensor({cout})));
    cin = cout;
  }
}

std::vector<Var> ConvCritic::parameters() const {
  std::vector<Var> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(weights_[l]);
    out.push_back(biases_[l]);
  }
  return out;
}

Var ConvCritic::to_input(const Var& x) const {
  if (x.value().rank() != 2 || x.shape()[1] != bins_) {
    throw ShapeError("ConvCritic: expected [N, " + std::to_string(bins_) + "], got " +
                     nn::shape_str(x.shape()));
  }
  if (axis_ == CriticAxis::kTime) return x;
  return nn::reshape(x, {x.shape()[0], bins_, 1});
}

std::vector<Var> ConvCritic::pre_activations(const Var& x) const {
  std::vector<Var> z;
  Var h = to_input(x);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    z.push_back(nn::add_bias(nn::conv1d(h, weights_[l]), biases_[l]));
    if (l + 1 < weights_.size()) h = nn::leaky_relu(z.back(), slope_);
  }
  return z;
}

Var ConvCritic::score(const Var& x) const { return nn::mean(pre_activations(x).back()); }

Var ConvCritic::input_gradient(const Var& x) const {
  std::vector<Var> z;
  {
    nn::NoGradGuard guard;
    z = pre_activations(x);
  }
  const Tensor& last = z.back().value();
  Var delta(Tensor(last.shape(), 1.0 / static_cast<double>(last.size())));
  for (std::size_t l = weights_.size(); l-- > 0;) {
    delta = nn::conv1d(delta, nn::flip_taps(weights_[l]));
    if (l > 0) {
      const Tensor& pre = z[l - 1].value();
      Tensor mask(pre.shape());
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = pre[i] > 0.0 ? 1.0 : slope_;
      delta = nn::mul(delta, Var(std::move(mask)));
    }
  }
  return nn::reshape(delta, x.shape());
}

namespace {

void check_batch(const std::vector<Tensor>& real, const std::vector<Tensor>& fake) {
  if (real.empty() || real.size() != fake.size()) {
    throw ShapeError("WGAN-GP: " + std::to_string(real.size()) + " real vs " +
                     std::to_string(fake.size()) + " fake samples");
  }
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (real[i].shape() != fake[i].shape()) {
      throw ShapeError("WGAN-GP: sample " + std::to_string(i) + " shapes " +
                       nn::shape_str(real[i].shape()) + " and " +
                       nn::shape_str(fake[i].shape()));
    }
  }
}

}  // namespace

WganDTerms wgan_gp_d_loss(const Critic& critic, const std::vector<Tensor>& real,
                          const std::vector<Tensor>& fake, double gamma,
                          const std::vector<double>& eps) {
  check_batch(real, fake);
  if (eps.size() != real.size()) {
    throw ShapeError("WGAN-GP: " + std::to_string(eps.size()) + " interpolation weights for " +
                     std::to_string(real.size()) + " samples");
  }
  const double inv = 1.0 / static_cast<double>(real.size());
  Var total;
  double wasserstein = 0.0, penalty = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    Var d_real = critic.score(Var(real[i]));
    Var d_fake = critic.score(Var(fake[i]));
    Tensor mixed(real[i].shape());
    for (std::size_t j = 0; j < mixed.size(); ++j) {
      mixed[j] = eps[i] * real[i][j] + (1.0 - eps[i]) * fake[i][j];
    }
    Var grad = critic.input_gradient(Var(std::move(mixed)));
    Var gp = nn::square(nn::add_scalar(nn::l2_norm(grad), -1.0));
    wasserstein += (d_real.value()[0] - d_fake.value()[0]) * inv;
    penalty += gp.value()[0] * inv;
    Var term = nn::scale(nn::add(nn::sub(d_fake, d_real), nn::scale(gp, gamma)), inv);
    total = i == 0 ? term : nn::add(total, term);
  }
  return {total, wasserstein, penalty};
}

WganDTerms wgan_gp_d_loss(const Critic& critic, const std::vector<Tensor>& real,
                          const std::vector<Tensor>& fake, double gamma, Rng& rng) {
  std::vector<double> eps(real.size());
  for (double& e : eps) e = rng.uniform();
  return wgan_gp_d_loss(critic, real, fake, gamma, eps);
}

Var wgan_g_loss(const Critic& critic, const std::vector<Var>& fake) {
  if (fake.empty()) throw ShapeError("wgan_g_loss: empty batch");
  const double inv = 1.0 / static_cast<double>(fake.size());
  Var total;
  for (std::size_t i = 0; i < fake.size(); ++i) {
    Var term = nn::scale(critic.score(fake[i]), -inv);
    total = i == 0 ? term : nn::add(total, term);
  }
  return total;
}

}  // namespace dnr::losses
