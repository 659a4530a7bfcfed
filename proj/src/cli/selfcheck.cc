// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/cli/selfcheck.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "dnr/common/random.h"
#include "dnr/degrade/rir.h"
#include "dnr/enhance/spectral.h"
#include "dnr/losses/gradcheck.h"
#include "dnr/losses/losses.h"
#include "dnr/losses/wgan.h"
#include "dnr/nn/gradcheck.h"
#include "dnr/signal/stft.h"

namespace dnr::cli {

namespace {

void gradient_checks(std::uint64_t seed, int seeds, std::vector<CheckResult>& out) {
  std::map<std::string, double> worst;
  for (int i = 0; i < seeds; ++i) {
    const std::uint64_t s = derive_seed(seed, 100 + i);
    for (const auto& c : nn::primitive_gradient_suite(s)) {
      worst["grad/" + c.name] = std::max(worst["grad/" + c.name], c.result.max_rel_error);
    }
    for (const auto& c : losses::loss_gradient_suite(s)) {
      worst["grad/" + c.name] = std::max(worst["grad/" + c.name], c.result.max_rel_error);
    }
  }
  for (const auto& [name, v] : worst) out.push_back({name, v, 1e-4});
}

signal::Waveform noise(Rng& rng, std::size_t n) {
  signal::Waveform w{std::vector<double>(n), signal::kDefaultSampleRate};
  for (double& v : w.samples) v = rng.normal();
  return w;
}

CheckResult stft_round_trip(Rng& rng) {
  const signal::StftConfig cfg;
  const std::size_t edge = static_cast<std::size_t>(cfg.frame_samples());
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto w = noise(rng, 12000);
    const auto y = signal::istfs(signal::stft(w, cfg));
    for (std::size_t t = edge; t + edge < w.size(); ++t) {
      worst = std::max(worst, std::abs(y.samples[t] - w.samples[t]));
    }
  }
  return {"stft/round_trip", worst, 1e-6};
}

CheckResult denoise_inverse(Rng& rng) {
  const signal::StftConfig cfg;
  const int frames = 6, bins = cfg.bins();
  const double floor = std::log(signal::kAmpFloor);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> taps(degrade::kRirLength);
    double decay = 1.0;
    for (double& v : taps) {
      v = decay * rng.normal();
      decay *= 0.997;
    }
    const auto rm = enhance::rir_magnitude(degrade::make_rir(taps));
    enhance::NoiseEstimate ne;
    ne.alpha = rng.uniform(0.05, 2.0);
    ne.noise_las = {Matrix(frames, bins), cfg};
    signal::Las clean{Matrix(frames, bins), cfg};
    signal::Las observed{Matrix(frames, bins), cfg};
    for (int n = 0; n < frames; ++n) {
      for (int k = 0; k < bins; ++k) {
        clean.values(n, k) = rng.uniform(-6.0, 3.0);
        ne.noise_las.values(n, k) = rng.uniform(-8.0, 1.0);
        observed.values(n, k) =
            std::log(rm.r_mag[k]) +
            std::log(std::exp(clean.values(n, k)) + ne.alpha * std::exp(ne.noise_las.values(n, k)));
      }
    }
    const auto got = enhance::initial_denoise_dereverb(observed, rm, ne);
    for (int n = 0; n < frames; ++n) {
      for (int k = 0; k < bins; ++k) {
        if (clean.values(n, k) <= floor) continue;
        worst = std::max(worst, std::abs(got.values(n, k) - clean.values(n, k)));
      }
    }
  }
  return {"enhance/denoise_inverse", worst, 1e-9};
}

void loss_minima(Rng& rng, std::vector<CheckResult>& out) {
  const signal::StftConfig cfg;
  signal::Las a{Matrix(10, cfg.bins()), cfg};
  for (int n = 0; n < 10; ++n) {
    for (int k = 0; k < cfg.bins(); ++k) a.values(n, k) = rng.normal();
  }
  out.push_back({"loss/mse_at_equality", std::abs(losses::mse_las(a, a)), 1e-9});

  std::vector<double> r(512), affine(512);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = rng.normal();
    affine[i] = 2.5 * r[i] + 0.7;
  }
  out.push_back(
      {"loss/neg_correlation_affine", std::abs(losses::neg_correlation(r, affine) + 1.0), 1e-9});

  const auto w = noise(rng, 6000);
  out.push_back(
      {"loss/multiscale_stft_at_equality", std::abs(losses::multiscale_stft_loss(w, w)), 1e-9});

  std::vector<double> unit(16);
  double norm = 0.0;
  for (double& v : unit) {
    v = rng.normal();
    norm += v * v;
  }
  for (double& v : unit) v /= std::sqrt(norm);
  const losses::LinearCritic critic(nn::Var(nn::Tensor({16}, unit)));
  std::vector<nn::Tensor> real, fake;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> x(16), y(16);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    real.emplace_back(nn::Shape{16}, x);
    fake.emplace_back(nn::Shape{16}, y);
  }
  const auto terms = losses::wgan_gp_d_loss(critic, real, fake, 10.0, rng);
  out.push_back({"loss/gp_unit_linear_critic", std::abs(terms.penalty), 1e-9});
}

}  // namespace

std::vector<CheckResult> selfcheck(std::uint64_t seed, int gradient_seeds) {
  std::vector<CheckResult> out;
  gradient_checks(seed, gradient_seeds, out);
  Rng rng(derive_seed(seed, 7));
  out.push_back(stft_round_trip(rng));
  out.push_back(denoise_inverse(rng));
  loss_minima(rng, out);
  return out;
}

}  // namespace dnr::cli
