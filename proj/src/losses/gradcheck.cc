// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/losses/gradcheck.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/losses/losses.h"
#include "dnr/losses/wgan.h"
#include "dnr/nn/ops.h"
#include "dnr/nn/param_store.h"

namespace dnr::losses {

using nn::Tensor;
using nn::Var;

namespace {

Tensor random_tensor(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

std::vector<double> random_signal(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(-0.5, 0.5);
  return x;
}

const std::vector<StftScale> kSmallScales = {{64, 16, 48}, {128, 32, 96}};

// Log magnitudes of weak bins have large third derivatives; a smaller step
// keeps the central-difference truncation error well below tolerance.
constexpr double kSpectralStep = 1e-7;

constexpr double kKinkMargin = 1e-5;

bool clear_of_kinks(const ConvCritic& critic, const std::vector<Tensor>& real,
                    const std::vector<Tensor>& fake, const std::vector<double>& eps) {
  nn::NoGradGuard guard;
  for (std::size_t i = 0; i < real.size(); ++i) {
    Tensor mixed = real[i];
    for (std::size_t j = 0; j < mixed.size(); ++j) {
      mixed[j] = eps[i] * real[i][j] + (1.0 - eps[i]) * fake[i][j];
    }
    for (const Tensor* x : std::array<const Tensor*, 3>{&real[i], &fake[i], &mixed}) {
      const auto z = critic.pre_activations(Var(*x));
      for (std::size_t l = 0; l + 1 < z.size(); ++l) {
        const Tensor& t = z[l].value();
        for (std::size_t j = 0; j < t.size(); ++j) {
          if (std::abs(t[j]) < kKinkMargin) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace

std::vector<nn::NamedGradCheck> loss_gradient_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<nn::NamedGradCheck> out;
  {
    Var a(random_tensor({6, 5}, rng), true), b(random_tensor({6, 5}, rng), true);
    out.push_back({"mse", nn::check_gradients([&] { return mse(a, b); }, {a, b})});
  }
  {
    Var r(random_tensor({64}, rng), true), h(random_tensor({64}, rng), true);
    out.push_back({"neg_correlation",
                   nn::check_gradients([&] { return neg_correlation(r, h); }, {r, h})});
  }
  {
    const auto x = random_signal(256, rng);
    Var y(Tensor({256}, random_signal(256, rng)), true);
    out.push_back({"multiscale_stft_loss",
                   nn::check_gradients(
                       [&] { return multiscale_stft_loss(x, y, kSmallScales); }, {y},
                       kSpectralStep)});
  }
  {
    const auto x = random_signal(96, rng);
    Var h(random_tensor({16}, rng), true);
    Var w(random_tensor({96}, rng));
    out.push_back({"convolve", nn::check_gradients(
                                   [&] { return nn::sum(nn::mul(convolve(x, h), w)); }, {h})});
  }
  {
    const auto natural = random_signal(256, rng);
    const auto noisy = random_signal(256, rng);
    Var h(random_tensor({32}, rng), true);
    out.push_back({"l_rs", nn::check_gradients(
                               [&] { return l_rs(natural, noisy, h, kSmallScales); }, {h},
                               kSpectralStep)});
  }
  for (CriticAxis axis : {CriticAxis::kTime, CriticAxis::kFrequency}) {
    nn::ParamStore store;
    ConvCritic critic(store, "critic", axis, 7, {4, 3}, 3, rng);
    std::vector<Tensor> real, fake;
    std::vector<double> eps;
    // The penalty jumps where a hidden unit changes sign, so points whose
    // difference stencil could straddle a kink are redrawn.
    int attempts = 0;
    do {
      if (++attempts > 1000) throw NumericError("no kink-free critic sample");
      real = {random_tensor({5, 7}, rng), random_tensor({4, 7}, rng)};
      fake = {random_tensor({5, 7}, rng), random_tensor({4, 7}, rng)};
      eps = {rng.uniform(), rng.uniform()};
    } while (!clear_of_kinks(critic, real, fake, eps));
    const std::string tag = axis == CriticAxis::kTime ? "time" : "frequency";
    // The last bias cancels between real and fake, so its exact gradient is
    // zero and a difference quotient would be pure rounding noise. It is
    // checked for an exactly vanishing gradient instead.
    std::vector<Var> params = critic.parameters();
    const Var last_bias = params.back();
    params.pop_back();
    const auto d_loss = [&] { return wgan_gp_d_loss(critic, real, fake, 10.0, eps).loss; };
    out.push_back({"wgan_gp_d_loss/" + tag, nn::check_gradients(d_loss, params)});
    for (Var p : critic.parameters()) p.zero_grad();
    nn::backward(d_loss());
    nn::GradCheckResult bias;
    const Tensor g_bias = last_bias.grad();
    for (double g : g_bias.vec()) {
      bias.max_rel_error = std::max(bias.max_rel_error, std::abs(g));
    }
    bias.worst_input = "last bias";
    out.push_back({"wgan_gp_d_loss/" + tag + "/last_bias", bias});
    std::vector<Var> fakes = {Var(fake[0], true), Var(fake[1], true)};
    out.push_back({"wgan_g_loss/" + tag,
                   nn::check_gradients([&] { return wgan_g_loss(critic, fakes); }, fakes)});
  }
  return out;
}

}  // namespace dnr::losses
