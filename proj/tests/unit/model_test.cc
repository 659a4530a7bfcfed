// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <set>

#include "dnr/common/error.h"
#include "dnr/degrade/mix.h"
#include "dnr/degrade/sources.h"
#include "dnr/model/pipeline.h"
#include "dnr/model/trainer.h"
#include "dnr/nn/ops.h"

namespace dnr::model {
namespace {

using nn::Tensor;
using nn::Var;

ModelConfig tiny_config() {
  ModelConfig c;
  c.enc_gru_hidden = 40;
  c.enc_channels = {2, 2, 4, 4, 8};
  c.num_templates = 4;
  c.heads = 2;
  c.converter_width = 16;
  c.noise_width = 8;
  c.alpha_width = 4;
  c.reverb_gru_hidden = 4;
  c.reverb_width = 8;
  c.post_gru_hidden = 4;
  c.post_width = 16;
  c.critic_time_channels = {8};
  c.critic_freq_channels = {4};
  c.bf_gru_hidden = 4;
  c.bf_width = 16;
  return c;
}

Example synth_example(int i, double seconds = 0.5) {
  const auto clean = degrade::synth_speech(100 + i, seconds);
  const auto rir = degrade::synth_rir(200 + i, 0.3 + 0.1 * i);
  const auto noise = degrade::synth_noise(degrade::NoiseKind::kPink, 300 + i, seconds);
  const auto mix = degrade::mix_at_snr(degrade::convolve_rir(clean, rir), noise, 5.0 + i);
  signal::Waveform noisy = clean;
  for (std::size_t t = 0; t < noisy.size(); ++t) noisy.samples[t] += mix.scaled_noise.samples[t];
  return make_example("utt" + std::to_string(i), clean, mix.scaled_noise, rir, mix.mixed, noisy);
}

const std::vector<Example>& examples() {
  static const std::vector<Example> ex = {synth_example(0), synth_example(1)};
  return ex;
}

std::vector<const Example*> pointers() {
  std::vector<const Example*> p;
  for (const auto& e : examples()) p.push_back(&e);
  return p;
}

bool all_finite(const Var& v) { return v.value().all_finite(); }

TEST(Config, PresetsValidate) {
  EXPECT_NO_THROW(ModelConfig::desk().validate());
  EXPECT_NO_THROW(ModelConfig::paper().validate());
  EXPECT_NO_THROW(ModelConfig::frame_wise().validate());
  ModelConfig bad = ModelConfig::desk();
  bad.heads = 5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ModelConfig::desk();
  bad.converter_taps = 4;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_EQ(parse_scale("desk"), Scale::kDesk);
  EXPECT_THROW(parse_scale("huge"), ConfigError);
}

TEST(Config, LearningRateRatioRange) {
  TrainConfig tc;
  for (double r : {0.0, 0.05, 1.0}) {
    tc.lr_final_ratio = r;
    EXPECT_NO_THROW(tc.validate()) << r;
  }
  for (double r : {-0.1, 1.5, std::nan("")}) {
    tc.lr_final_ratio = r;
    EXPECT_THROW(tc.validate(), ConfigError) << r;
  }
}

TEST(Trainer, AnnealingOnlyChangesLaterSteps) {
  auto first_rows = [](double ratio) {
    DnrAspModel m(tiny_config(), 27);
    m.set_norm_stats(compute_norm_stats(examples()));
    CriticBundle critics(tiny_config(), 1025, 28);
    TrainConfig tc;
    tc.lr_final_ratio = ratio;
    tc.step1_steps = 3;
    tc.step2_steps = 0;
    tc.step3_steps = 0;
    Trainer t(m, critics, tc, pointers());
    t.run();
    return t.log();
  };
  const auto constant = first_rows(1.0);
  const auto annealed = first_rows(0.0);
  ASSERT_EQ(constant.size(), 3u);
  // Step 1 runs at the full rate either way; the rate only differs afterwards.
  EXPECT_EQ(constant[0].values, annealed[0].values);
  EXPECT_EQ(constant[1].values, annealed[1].values);
  EXPECT_NE(constant[2].values, annealed[2].values);
}

TEST(Config, ChannelEncoderMustReduceToWidthOne) {
  ModelConfig c = tiny_config();
  c.enc_channels = {2, 2};
  EXPECT_THROW(DnrAspModel(c, 1), ConfigError);
}

TEST(Forward, ShapesAndFiniteness) {
  const ModelConfig c = ModelConfig::desk();
  DnrAspModel m(c, 3);
  m.set_norm_stats(compute_norm_stats(examples()));
  const Example& ex = examples()[0];
  const ForwardOutputs out = m.forward(ex.features);
  const std::int64_t n = ex.num_frames(), k = c.bins();
  EXPECT_EQ(out.token.shape(), (nn::Shape{1, c.token_dim()}));
  EXPECT_EQ(out.l_nr.shape(), (nn::Shape{n, k}));
  EXPECT_EQ(out.l_ne.shape(), (nn::Shape{n, k}));
  EXPECT_EQ(out.alpha.value().size(), 1u);
  EXPECT_GE(out.alpha.value()[0], 0.0);
  EXPECT_EQ(out.r_hat.shape(), (nn::Shape{c.rir_length}));
  EXPECT_EQ(out.l_tilde.shape(), (nn::Shape{n, k}));
  EXPECT_EQ(out.l_c.shape(), (nn::Shape{n, k}));
  for (const Var* v : {&out.token, &out.l_nr, &out.l_ne, &out.alpha, &out.r_hat, &out.l_tilde,
                       &out.l_c}) {
    EXPECT_TRUE(all_finite(*v));
  }
}

TEST(Forward, PostModuleStartsAsIdentity) {
  DnrAspModel m(tiny_config(), 4);
  m.set_norm_stats(compute_norm_stats(examples()));
  const ForwardOutputs out = m.forward(examples()[1].features);
  EXPECT_EQ(out.l_c.value(), out.l_tilde.value());
}

TEST(Forward, ZeroAlphaAndImpulseBypassInitialOperation) {
  DnrAspModel m(tiny_config(), 5);
  m.set_norm_stats(compute_norm_stats(examples()));
  ForwardOptions opts;
  opts.alpha_override = 0.0;
  opts.rir_override = degrade::unit_impulse().taps;
  const ForwardOutputs out = m.forward(examples()[0].features, opts);
  const double floor = std::log(signal::kAmpFloor);
  for (std::size_t i = 0; i < out.l_nr.value().size(); ++i) {
    if (out.l_nr.value()[i] > floor) {
      ASSERT_EQ(out.l_tilde.value()[i], out.l_nr.value()[i]) << i;
    }
  }
}

TEST(Forward, PooledHeadsIgnoreFrameDuplication) {
  DnrAspModel m(ModelConfig::frame_wise(), 6);
  m.set_norm_stats(compute_norm_stats(examples()));
  const signal::AcousticFeatures& f = examples()[0].features;
  signal::AcousticFeatures dup;
  dup.mel = Matrix(2 * f.num_frames(), f.mel.cols());
  for (int i = 0; i < f.num_frames(); ++i) {
    dup.mel.row(2 * i) = f.mel.row(i);
    dup.mel.row(2 * i + 1) = f.mel.row(i);
    for (int r = 0; r < 2; ++r) {
      dup.f0.push_back(f.f0[i]);
      dup.vuv.push_back(f.vuv[i]);
    }
  }
  const ForwardOutputs a = m.forward(f), b = m.forward(dup);
  EXPECT_NEAR(a.alpha.value()[0], b.alpha.value()[0], 1e-6);
  for (std::size_t i = 0; i < a.r_hat.value().size(); ++i) {
    ASSERT_NEAR(a.r_hat.value()[i], b.r_hat.value()[i], 1e-6);
  }
  for (std::size_t i = 0; i < a.token.value().size(); ++i) {
    EXPECT_NEAR(a.token.value()[i], b.token.value()[i], 1e-6);
  }
}

TEST(Forward, RejectsBadFeatures) {
  DnrAspModel m(tiny_config(), 7);
  signal::AcousticFeatures f = examples()[0].features;
  f.f0.pop_back();
  EXPECT_THROW(m.forward(f), ShapeError);
  f = examples()[0].features;
  f.mel = Matrix::Zero(f.num_frames(), 40);
  EXPECT_THROW(m.forward(f), ShapeError);
}

// Supervision-equal predictions: every loss sits at its minimum.
ForwardOutputs perfect_outputs(const Example& ex) {
  ForwardOutputs out;
  out.l_nr = Var(to_tensor(ex.l_nr.values));
  out.l_ne = Var(to_tensor(ex.l_ne.values));
  out.r_hat = Var(Tensor({2048}, ex.rir.taps));
  out.l_tilde = Var(to_tensor(ex.l_c.values));
  out.l_c = Var(to_tensor(ex.l_c.values));
  return out;
}

Example reverb_consistent(const Example& base) {
  Example ex = base;
  ex.degraded = degrade::convolve_rir(ex.noisy, ex.rir);
  return ex;
}

TEST(Step1Losses, MinimaAttained) {
  const Example ex = reverb_consistent(examples()[0]);
  const Step1Losses l = step1_losses(perfect_outputs(ex), ex);
  const auto v = l.values();
  EXPECT_EQ(v.at("l_nr"), 0.0);
  EXPECT_EQ(v.at("l_ne"), 0.0);
  EXPECT_NEAR(v.at("l_rc"), -1.0, 1e-12);
  EXPECT_NEAR(v.at("l_rs"), 0.0, 1e-12);
  EXPECT_EQ(v.at("l_i"), 0.0);
  EXPECT_EQ(v.at("l_c"), 0.0);
  EXPECT_NEAR(v.at("total"), -1.0, 1e-12);
}

TEST(Step1Losses, EachSupervisionFeedsExactlyItsTerms) {
  const Example base = reverb_consistent(examples()[0]);
  const ForwardOutputs out = perfect_outputs(base);
  const auto ref = step1_losses(out, base).values();
  struct Case {
    const char* name;
    std::function<void(Example&)> perturb;
    std::set<std::string> expected;
  };
  const std::vector<Case> cases = {
      {"l_nr", [](Example& e) { e.l_nr.values.array() += 0.1; }, {"l_nr"}},
      {"l_ne", [](Example& e) { e.l_ne.values.array() += 0.1; }, {"l_ne"}},
      {"rir", [](Example& e) { e.rir.taps[5] += 0.3; }, {"l_rc"}},
      {"degraded", [](Example& e) { e.degraded.samples[1000] += 0.2; }, {"l_rs"}},
      {"noisy", [](Example& e) { e.noisy.samples[1000] += 0.2; }, {"l_rs"}},
      {"l_c", [](Example& e) { e.l_c.values.array() += 0.1; }, {"l_i", "l_c"}},
  };
  for (const Case& c : cases) {
    Example ex = base;
    c.perturb(ex);
    const auto v = step1_losses(out, ex).values();
    for (const auto& [name, value] : v) {
      if (name == "total") continue;
      const bool changed = value != ref.at(name);
      EXPECT_EQ(changed, c.expected.count(name) == 1) << c.name << " -> " << name;
    }
  }
}

TEST(Trainer, EveryTrainableTensorReceivesGradient) {
  DnrAspModel m(ModelConfig::desk(), 8);
  m.set_norm_stats(compute_norm_stats(examples()));
  CriticBundle critics(ModelConfig::desk(), 1025, 9);
  TrainConfig tc;
  tc.lr = 1e-3;
  Trainer t(m, critics, tc, pointers());
  t.step1({&examples()[0]});
  t.step1({&examples()[1]});
  for (const auto& prefix : submodule_prefixes()) {
    const auto entries = m.params().entries(prefix);
    ASSERT_FALSE(entries.empty()) << prefix;
    for (const auto& [name, var] : entries) {
      const Tensor g = var.grad();
      double norm = 0.0;
      for (double x : g.vec()) norm += x * x;
      EXPECT_GT(norm, 0.0) << name;
    }
  }
}

TEST(Trainer, PhaseOrderIsEnforced) {
  DnrAspModel m(tiny_config(), 10);
  m.set_norm_stats(compute_norm_stats(examples()));
  CriticBundle critics(tiny_config(), 1025, 11);
  Trainer t(m, critics, TrainConfig{}, pointers());
  EXPECT_EQ(t.phase(), Phase::kStep1);
  EXPECT_THROW(t.step2(pointers()), ConfigError);
  EXPECT_THROW(t.step3(pointers()), ConfigError);
  t.complete_step1();
  EXPECT_THROW(t.step1(pointers()), ConfigError);
  EXPECT_NO_THROW(t.step2(pointers()));
  EXPECT_NO_THROW(t.step3(pointers()));
  EXPECT_THROW(t.step2(pointers()), ConfigError);
}

TEST(Trainer, GeneratorStepFreezesEverythingButPostModule) {
  DnrAspModel m(tiny_config(), 12);
  m.set_norm_stats(compute_norm_stats(examples()));
  CriticBundle critics(tiny_config(), 1025, 13);
  TrainConfig tc;
  tc.lr = 1e-3;
  Trainer t(m, critics, tc, pointers());
  t.step1(pointers());
  t.complete_step1();
  const nn::NamedTensors before = m.params().snapshot();
  t.step3(pointers());
  t.step3(pointers());
  const nn::NamedTensors after = m.params().snapshot();
  ASSERT_EQ(before.size(), after.size());
  bool post_changed = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i].first.rfind(kPostModule, 0) == 0) {
      post_changed = post_changed || !(before[i].second == after[i].second);
    } else {
      EXPECT_EQ(before[i].second, after[i].second) << before[i].first;
    }
  }
  EXPECT_TRUE(post_changed);
}

TEST(Trainer, ZeroLambdaLeavesPureAdversarialLoss) {
  DnrAspModel m(tiny_config(), 14);
  m.set_norm_stats(compute_norm_stats(examples()));
  CriticBundle critics(tiny_config(), 1025, 15);
  TrainConfig tc;
  tc.lambda_c = 0.0;
  Trainer t(m, critics, tc, pointers());
  t.complete_step1();
  const auto v = t.step3(pointers());
  EXPECT_EQ(v.at("total"), v.at("g_adv"));
  EXPECT_GT(v.at("l_c"), 0.0);
}

TEST(Trainer, CriticSeparationGrows) {
  DnrAspModel m(tiny_config(), 16);
  m.set_norm_stats(compute_norm_stats(examples()));
  CriticBundle critics(tiny_config(), 1025, 17);
  TrainConfig tc;
  tc.critic_lr = 1e-3;
  Trainer t(m, critics, tc, pointers());
  t.complete_step1();
  const double first = t.step2(pointers()).at("wasserstein");
  double last = first;
  for (int i = 0; i < 49; ++i) last = t.step2(pointers()).at("wasserstein");
  EXPECT_GT(last, first);
}

TEST(Trainer, SeededRunsAreIdentical) {
  auto run = [] {
    DnrAspModel m(tiny_config(), 18);
    m.set_norm_stats(compute_norm_stats(examples()));
    CriticBundle critics(tiny_config(), 1025, 19);
    TrainConfig tc;
    tc.step1_steps = 3;
    tc.step2_steps = 2;
    tc.step3_steps = 2;
    Trainer t(m, critics, tc, pointers());
    t.run();
    return format_loss_csv(t.log());
  };
  const std::string a = run();
  EXPECT_EQ(a, run());
  EXPECT_NE(a.find("step3,2,"), std::string::npos);
}

TEST(Trainer, BatchOrderCoversEveryExamplePerEpoch) {
  DnrAspModel m(tiny_config(), 20);
  CriticBundle critics(tiny_config(), 1025, 21);
  Trainer t(m, critics, TrainConfig{}, pointers());
  std::set<const Example*> seen;
  for (int i = 0; i < 2; ++i) seen.insert(t.next_batch()[0]);
  EXPECT_EQ(seen.size(), 2u);
}

TEST(LossCsv, FormatsMissingColumnsEmpty) {
  const std::string csv = format_loss_csv({{"fre", 4, {{"l_fre", 0.5}}}});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "phase,step,l_nr,l_ne,l_rc,l_rs,l_i,l_c,total,d_loss,wasserstein,penalty,g_adv,"
            "l_bwe,l_fre");
  EXPECT_NE(csv.find("fre,4,,,,,,,,,,,,,0.5\n"), std::string::npos);
}

TEST(BweFre, ShapesAndResidualStart) {
  BweFreModels bf(tiny_config(), 22);
  bf.set_norm_stats(compute_norm_stats(examples()));
  const Example& ex = examples()[0];
  const auto [narrow, high] = enhance::band_split(ex.l_c);
  const Var h = bf.bwe(Var(to_tensor(narrow.values)));
  EXPECT_EQ(h.dim(1), 685);
  signal::Las high_hat{Matrix::Zero(h.dim(0), h.dim(1)), ex.l_c.config};
  EXPECT_EQ(enhance::band_merge(narrow, high_hat).num_bins(), 1025);
  const Var fine = bf.fre(ex.l_c);
  EXPECT_EQ(fine.dim(1), 4097);
  // Zero-initialized residual: exactly the interpolation baseline.
  EXPECT_EQ(fine.value(), to_tensor(enhance::fre_upsample_reference(ex.l_c).values));
  EXPECT_EQ(bf.extend(ex.l_c).num_bins(), 4097);
}

TEST(BweFre, TrainingReducesBothLosses) {
  BweFreModels bf(tiny_config(), 23);
  bf.set_norm_stats(compute_norm_stats(examples()));
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.bwe_steps = 20;
  tc.fre_steps = 20;
  const std::vector<const Example*> one = {&examples()[0]};
  std::vector<LossRow> log;
  train_bwe(bf, tc, one, log);
  train_fre(bf, tc, one, log);
  ASSERT_GE(log.size(), 4u);
  EXPECT_LT(log[19].values.at("l_bwe"), log[0].values.at("l_bwe"));
  const double baseline = losses::mse_las(examples()[0].l_c_fine,
                                          enhance::fre_upsample_reference(examples()[0].l_c));
  EXPECT_LT(log.back().values.at("l_fre"), log[20].values.at("l_fre"));
  EXPECT_NEAR(log[20].values.at("l_fre"), baseline, 1e-9);
}

TEST(Checkpoint, RoundTripReproducesForward) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "dnr_model_test_ckpt";
  std::filesystem::create_directories(dir);
  DnrAspModel m(tiny_config(), 24);
  m.set_norm_stats(compute_norm_stats(examples()));
  round_params_to_float32(m.params());
  m.params().save(dir / kModelWeights);
  DnrAspModel loaded(tiny_config(), 999);
  loaded.params().load(dir / kModelWeights);
  EXPECT_EQ(m.forward(examples()[0].features).l_c.value(),
            loaded.forward(examples()[0].features).l_c.value());
  ModelConfig wider = tiny_config();
  wider.converter_width = 32;
  DnrAspModel mismatched(wider, 1);
  try {
    mismatched.params().load(dir / kModelWeights);
    FAIL() << "expected a shape error";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("converter/"), std::string::npos) << e.what();
  }
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, OutputResolutionAndDeterminism) {
  DnrAspModel m(tiny_config(), 25);
  m.set_norm_stats(compute_norm_stats(examples()));
  BweFreModels bf(tiny_config(), 26);
  bf.set_norm_stats(compute_norm_stats(examples()));
  const signal::Waveform& degraded = examples()[0].degraded;
  const EnhanceResult plain = enhance(m, nullptr, degraded);
  EXPECT_EQ(plain.las.num_bins(), 1025);
  EXPECT_EQ(plain.audio.size(), degraded.size());
  const EnhanceResult extended = enhance(m, &bf, degraded);
  EXPECT_EQ(extended.las.num_bins(), 4097);
  EXPECT_EQ(extended.audio.size(), degraded.size());
  EXPECT_EQ(enhance(m, nullptr, degraded).audio.samples, plain.audio.samples);
}

}  // namespace
}  // namespace dnr::model
