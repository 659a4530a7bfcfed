// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "dnr/common/error.h"
#include "dnr/common/random.h"
#include "dnr/degrade/sources.h"
#include "dnr/enhance/ops.h"
#include "dnr/enhance/spectral.h"
#include "dnr/nn/gradcheck.h"
#include "dnr/nn/ops.h"

namespace dnr::enhance {
namespace {

using signal::Las;
using signal::StftConfig;

Las random_las(int n, int k, Rng& rng, double lo = -4.0, double hi = 1.0) {
  Las l{Matrix(n, k), StftConfig{}};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) l.values(i, j) = rng.uniform(lo, hi);
  }
  return l;
}

TEST(RirMagnitude, ImpulsesAreFlat) {
  for (double amp : {1.0, 0.5}) {
    const RirMagnitude rm = rir_magnitude(degrade::unit_impulse(0, amp));
    ASSERT_EQ(rm.r_mag.size(), 1025u);
    for (double v : rm.r_mag) EXPECT_NEAR(v, amp, 1e-12);
  }
}

TEST(RirMagnitude, MatchesDirectDft) {
  const degrade::Rir r = degrade::synth_rir(3, 0.25);
  const RirMagnitude rm = rir_magnitude(r);
  std::vector<double> naive(1025);
  double peak = 0.0;
  for (int k = 0; k < 1025; ++k) {
    std::complex<double> acc = 0.0;
    for (int t = 0; t < 2048; ++t) {
      acc += r.taps[t] * std::polar(1.0, -2.0 * std::numbers::pi * k * t / 2048.0);
    }
    naive[k] = std::abs(acc);
    peak = std::max(peak, naive[k]);
  }
  for (int k = 0; k < 1025; ++k) {
    EXPECT_NEAR(rm.r_mag[k], std::max(naive[k], 1e-3 * peak), 1e-9);
  }
}

TEST(RirMagnitude, FloorBoundsDynamicRange) {
  // Two taps that cancel exactly at Nyquist.
  const RirMagnitude rm = rir_magnitude(degrade::make_rir({1.0, 1.0}));
  EXPECT_NEAR(rm.r_mag[1024], 2e-3, 1e-12);
  EXPECT_NEAR(rm.r_mag[0], 2.0, 1e-12);
}

TEST(InitialDenoise, DegeneratesToIdentity) {
  Rng rng(1);
  const Las l = random_las(5, 1025, rng);
  NoiseEstimate ne{random_las(5, 1025, rng), 0.0};
  const Las out = initial_denoise_dereverb(l, {std::vector<double>(1025, 1.0)}, ne);
  EXPECT_EQ(out.values, l.values);
}

TEST(InitialDenoise, InvertsAmplitudeDomainMixture) {
  Rng rng(2);
  const int n = 6, k = 1025;
  const Las clean = random_las(n, k, rng, -3.0, 1.0);
  const Las noise = random_las(n, k, rng, -5.0, 0.0);
  const double g = 0.7, alpha = 0.4;
  Las mixed{Matrix(n, k), StftConfig{}};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      // The noise estimate sits inside the deconvolved domain, so the
      // single-tap gain scales both components.
      mixed.values(i, j) =
          std::log(g * (std::exp(clean.values(i, j)) + alpha * std::exp(noise.values(i, j))));
    }
  }
  const Las out = initial_denoise_dereverb(mixed, {std::vector<double>(k, g)},
                                           {noise, alpha});
  EXPECT_LT((out.values - clean.values).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(InitialDenoise, InverseProperty100Constructions) {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(7, trial));
    const int n = 3, k = 33;
    const Las clean = random_las(n, k, rng, -12.0, 3.0);
    const Las noise = random_las(n, k, rng, -10.0, 2.0);
    std::vector<double> r(k);
    for (double& v : r) v = std::exp(rng.uniform(std::log(1e-3), std::log(5.0)));
    const double alpha = trial % 5 == 0 ? 0.0 : rng.uniform(0.0, 3.0);
    Las mixed{Matrix(n, k), StftConfig{}};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        mixed.values(i, j) = std::log(
            r[j] * (std::exp(clean.values(i, j)) + alpha * std::exp(noise.values(i, j))));
      }
    }
    const Las out = initial_denoise_dereverb(mixed, {r}, {noise, alpha});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        if (std::exp(clean.values(i, j)) <= signal::kAmpFloor) continue;
        EXPECT_NEAR(out.values(i, j), clean.values(i, j), 1e-9) << trial;
      }
    }
  }
}

TEST(InitialDenoise, OversubtractionIsFloored) {
  Las l{Matrix::Constant(2, 3, -1.0), StftConfig{}};
  NoiseEstimate ne{Las{Matrix::Constant(2, 3, 0.0), StftConfig{}}, 1.0};
  const Las out = initial_denoise_dereverb(l, {std::vector<double>(3, 1.0)}, ne);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(out.values(i, j), std::log(signal::kAmpFloor));
    }
  }
}

TEST(InitialDenoise, ExtremeFiniteInputsStayFinite) {
  Las l{Matrix(1, 4), StftConfig{}};
  l.values << 900.0, -900.0, 0.0, 1e3;
  NoiseEstimate ne{Las{Matrix(1, 4), StftConfig{}}, 1e300};
  ne.noise_las.values << 899.0, 800.0, -1e3, 1e3;
  const Las out = initial_denoise_dereverb(l, {{1e-300, 1e300, 1.0, 1.0}}, ne);
  EXPECT_TRUE(out.values.allFinite());
}

TEST(InitialDenoise, ShapeAndValueErrors) {
  Rng rng(3);
  const Las l = random_las(2, 5, rng);
  EXPECT_THROW(initial_denoise_dereverb(l, {std::vector<double>(4, 1.0)}, {l, 0.0}),
               ShapeError);
  EXPECT_THROW(initial_denoise_dereverb(l, {std::vector<double>(5, 1.0)}, {l, -1.0}),
               NumericError);
}

TEST(InitialDenoiseOp, MatchesScalarAndForcedImpulseIsIdentity) {
  Rng rng(4);
  const Las l = random_las(4, 1025, rng);
  const Las noise = random_las(4, 1025, rng, -6, -2);
  auto to_var = [](const Las& x) {
    return nn::Var(nn::Tensor({x.values.rows(), x.values.cols()},
                              std::vector<double>(x.values.data(),
                                                  x.values.data() + x.values.size())));
  };
  const degrade::Rir r = degrade::synth_rir(5, 0.2);
  nn::Var rv(nn::Tensor({2048}, r.taps));
  nn::Var rm = rir_magnitude_op(rv);
  nn::Var y = initial_denoise_op(to_var(l), rm, to_var(noise), nn::Var(nn::Tensor({1}, 0.3)));
  const Las ref = initial_denoise_dereverb(l, rir_magnitude(r), {noise, 0.3});
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 1025; ++j) EXPECT_NEAR(y.value().at(i, j), ref.values(i, j), 1e-12);
  }
  nn::Var imp(nn::Tensor({2048}, degrade::unit_impulse().taps));
  nn::Var id = initial_denoise_op(to_var(l), rir_magnitude_op(imp), to_var(noise),
                                  nn::Var(nn::Tensor({1}, 0.0)));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 1025; ++j) EXPECT_EQ(id.value().at(i, j), l.values(i, j));
  }
}

TEST(InitialDenoiseOp, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(11, seed));
    auto rnd = [&](nn::Shape s, double lo, double hi, const char* name) {
      nn::Tensor t(std::move(s));
      for (double& v : t.vec()) v = rng.uniform(lo, hi);
      return nn::Var(std::move(t), true, name);
    };
    nn::Var l = rnd({3, 9}, -1.0, 1.0, "l");
    nn::Var ne = rnd({3, 9}, -4.0, -2.0, "ne");
    nn::Var taps = rnd({16}, -1.0, 1.0, "taps");
    nn::Var alpha = rnd({1}, 0.1, 0.5, "alpha");
    nn::Tensor w({3, 9});
    for (double& v : w.vec()) v = rng.normal();
    nn::Var wv(w);
    auto f = [&] {
      return nn::sum(nn::mul(initial_denoise_op(l, rir_magnitude_op(taps), ne, alpha), wv));
    };
    const auto res = nn::check_gradients(f, {l, ne, taps, alpha});
    EXPECT_LT(res.max_rel_error, 1e-4) << res.worst_input;
  }
}

TEST(Bands, SplitMergeRoundTripAndSizes) {
  Rng rng(5);
  const Las l = random_las(7, 1025, rng);
  const auto [narrow, high] = band_split(l);
  EXPECT_EQ(narrow.num_bins(), 341);
  EXPECT_EQ(high.num_bins(), 685);
  EXPECT_EQ(narrow.values(3, 340), high.values(3, 0));
  EXPECT_EQ(band_merge(narrow, high).values, l.values);
  EXPECT_THROW(band_split(random_las(2, 1024, rng)), ShapeError);
  EXPECT_THROW(band_merge(narrow, narrow), ShapeError);
}

TEST(Bands, MergeTakesSharedBinFromNarrow) {
  Rng rng(6);
  const Las l = random_las(2, 1025, rng);
  auto [narrow, high] = band_split(l);
  high.values.col(0).setConstant(99.0);
  EXPECT_EQ(band_merge(narrow, high).values, l.values);
}

TEST(FreReference, ConstantRampAndEndpoints) {
  Las c{Matrix::Constant(2, 1025, -2.5), StftConfig{}};
  const Las uc = fre_upsample_reference(c);
  ASSERT_EQ(uc.num_bins(), 4097);
  EXPECT_EQ(uc.config.fft_size, 8192);
  EXPECT_LT((uc.values.array() + 2.5).abs().maxCoeff(), 1e-12);
  Las ramp{Matrix(1, 1025), StftConfig{}};
  for (int j = 0; j < 1025; ++j) ramp.values(0, j) = 0.01 * j - 3.0;
  const Las ur = fre_upsample_reference(ramp);
  for (int j = 0; j < 4097; ++j) EXPECT_NEAR(ur.values(0, j), 0.0025 * j - 3.0, 1e-12);
  Rng rng(7);
  const Las r = random_las(3, 1025, rng);
  const Las u = fre_upsample_reference(r);
  EXPECT_EQ(u.values.col(0), r.values.col(0));
  EXPECT_EQ(u.values.col(4096), r.values.col(1024));
  EXPECT_EQ(u.values.col(4 * 17), r.values.col(17));
}

TEST(GriffinLim, ZeroIterationsKeepTargetMagnitudes) {
  Rng rng(8);
  const Las l = random_las(6, 1025, rng);
  const auto s = griffin_lim_phase(l, {.iters = 0, .seed = 3});
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 1025; ++j) {
      EXPECT_NEAR(std::abs(s.frames(i, j)), std::exp(l.values(i, j)),
                  1e-13 * std::exp(l.values(i, j)));
    }
  }
  const auto s2 = griffin_lim_phase(l, {.iters = 0, .seed = 3});
  EXPECT_EQ(s.frames, s2.frames);
}

TEST(GriffinLim, SpectralConvergenceIsNonIncreasing) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto speech = degrade::synth_speech(seed, 0.6);
    const Las l = signal::las_of(speech, StftConfig{});
    std::vector<double> trace;
    const auto s = griffin_lim_phase(l, {.iters = 30, .seed = seed}, &trace);
    ASSERT_EQ(trace.size(), 31u);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      EXPECT_LE(trace[i], trace[i - 1] * (1.0 + 1e-9)) << "iteration " << i;
    }
    EXPECT_LT(trace.back(), trace.front());
    for (int i = 0; i < s.num_frames(); ++i) {
      for (int j = 0; j < s.num_bins(); ++j) {
        EXPECT_NEAR(std::abs(s.frames(i, j)), std::exp(l.values(i, j)),
                    1e-12 * std::exp(l.values(i, j)));
      }
    }
  }
}

TEST(Reconstruct, OwnPhaseRecoversWaveform) {
  const auto speech = degrade::synth_speech(9, 0.8);
  for (int fft : {2048, 8192}) {
    const StftConfig cfg = StftConfig::with_fft(fft);
    const Las l = signal::las_of(speech, cfg);
    const auto out = reconstruct(l, PhaseSource::kNoisy, &speech);
    ASSERT_EQ(out.size(), speech.size());
    double err = 0.0;
    for (std::size_t t = 1200; t + 1200 < speech.size(); ++t) {
      err = std::max(err, std::abs(out.samples[t] - speech.samples[t]));
    }
    EXPECT_LT(err, 1e-5) << fft;
  }
}

TEST(Reconstruct, FlooredLasIsNearSilent) {
  Las l{Matrix::Constant(40, 1025, std::log(signal::kAmpFloor)), StftConfig{}};
  const auto speech = degrade::synth_speech(10, 0.5);
  EXPECT_LT(signal::peak_abs(reconstruct(l, PhaseSource::kNoisy, &speech).samples), 1e-3);
  // Griffin-Lim cannot make a flat floor spectrum consistent, and the few
  // head samples covered only by the window's tail are amplified by the
  // squared-window normalization; the body stays silent.
  const auto gl = reconstruct(l, PhaseSource::kGriffinLim);
  const std::vector<double> body(gl.samples.begin() + 288, gl.samples.end());
  EXPECT_LT(signal::peak_abs(body), 1e-3);
}

TEST(Reconstruct, GriffinLimDeterministicAndFrameCheck) {
  const auto speech = degrade::synth_speech(11, 0.4);
  const Las l = signal::las_of(speech, StftConfig{});
  const auto a = reconstruct(l, PhaseSource::kGriffinLim, &speech, {.iters = 5, .seed = 4});
  const auto b = reconstruct(l, PhaseSource::kGriffinLim, &speech, {.iters = 5, .seed = 4});
  EXPECT_EQ(a.samples, b.samples);
  signal::Waveform short_wave{std::vector<double>(speech.samples.begin(),
                                                  speech.samples.begin() + 2000)};
  EXPECT_THROW(reconstruct(l, PhaseSource::kNoisy, &short_wave), ShapeError);
  EXPECT_THROW(reconstruct(l, PhaseSource::kNoisy, nullptr), ConfigError);
}

}  // namespace
}  // namespace dnr::enhance
