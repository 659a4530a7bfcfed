// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/model/trainer.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dnr/common/error.h"
#include "dnr/losses/wgan.h"
#include "dnr/nn/ops.h"

namespace dnr::model {

using nn::Tensor;
using nn::Var;

Var Step1Losses::total() const {
  return nn::add(nn::add(nn::add(l_nr, l_ne), nn::add(l_rc, l_rs)), nn::add(l_i, l_c));
}

std::map<std::string, double> Step1Losses::values() const {
  return {{"l_nr", l_nr.value()[0]}, {"l_ne", l_ne.value()[0]}, {"l_rc", l_rc.value()[0]},
          {"l_rs", l_rs.value()[0]}, {"l_i", l_i.value()[0]},   {"l_c", l_c.value()[0]},
          {"total", total().value()[0]}};
}

Step1Losses step1_losses(const ForwardOutputs& out, const Example& ex,
                         const std::vector<losses::StftScale>& scales) {
  nn::NameScope scope("step1_losses");
  const Var l_c(to_tensor(ex.l_c.values));
  const Var rir(Tensor({static_cast<std::int64_t>(ex.rir.taps.size())}, ex.rir.taps));
  Step1Losses l;
  l.l_nr = losses::mse(Var(to_tensor(ex.l_nr.values)), out.l_nr);
  l.l_ne = losses::mse(Var(to_tensor(ex.l_ne.values)), out.l_ne);
  l.l_rc = losses::neg_correlation(rir, out.r_hat);
  l.l_rs = losses::l_rs(ex.degraded.samples, ex.noisy.samples, out.r_hat, scales);
  l.l_i = losses::mse(l_c, out.l_tilde);
  l.l_c = losses::mse(l_c, out.l_c);
  return l;
}

const std::vector<std::string>& loss_columns() {
  static const std::vector<std::string> columns = {
      "l_nr",    "l_ne",        "l_rc",    "l_rs",  "l_i",   "l_c",  "total",
      "d_loss", "wasserstein", "penalty", "g_adv", "l_bwe", "l_fre"};
  return columns;
}

std::string format_loss_csv(const std::vector<LossRow>& rows) {
  std::ostringstream os;
  os << "phase,step";
  for (const auto& c : loss_columns()) os << ',' << c;
  os << '\n';
  char buf[64];
  for (const LossRow& r : rows) {
    os << r.phase << ',' << r.step;
    for (const auto& c : loss_columns()) {
      os << ',';
      const auto it = r.values.find(c);
      if (it != r.values.end()) {
        std::snprintf(buf, sizeof(buf), "%.10g", it->second);
        os << buf;
      }
    }
    os << '\n';
  }
  return os.str();
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRow>& rows) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw IoError("cannot write " + tmp.string());
    f << format_loss_csv(rows);
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void round_params_to_float32(nn::ParamStore& store) {
  for (auto& [name, var] : store.entries()) {
    Var v = var;
    for (double& x : v.mutable_value().vec()) x = static_cast<double>(static_cast<float>(x));
  }
}

namespace {

nn::AdamOptions adam_options(double lr) {
  nn::AdamOptions o;
  o.lr = lr;
  o.round_to_float32 = true;
  return o;
}

void require_batch(const std::vector<const Example*>& batch) {
  if (batch.empty()) throw ConfigError("empty training batch");
  for (const Example* e : batch) {
    if (e == nullptr) throw ConfigError("null example in batch");
  }
}

void accumulate(std::map<std::string, double>& acc, const std::map<std::string, double>& v,
                double w) {
  for (const auto& [k, x] : v) acc[k] += w * x;
}

}  // namespace

Trainer::Trainer(DnrAspModel& model, CriticBundle& critics, const TrainConfig& config,
                 std::vector<const Example*> examples)
    : model_(model),
      critics_(critics),
      config_(config),
      examples_(std::move(examples)),
      d_rng_(derive_seed(config.seed, 0xD)) {
  config_.validate();
  require_batch(examples_);
  round_params_to_float32(model_.params());
  round_params_to_float32(critics_.params());
  all_opt_ = std::make_unique<nn::Adam>(model_.params().trainable(), adam_options(config_.lr));
  post_opt_ = std::make_unique<nn::Adam>(model_.params().trainable(kPostModule),
                                         adam_options(config_.lr * config_.lr_final_ratio));
  critic_opt_ = std::make_unique<nn::Adam>(critics_.params().trainable(),
                                           adam_options(config_.critic_lr));
}

void Trainer::complete_step1() {
  if (phase_ == Phase::kStep1) phase_ = Phase::kStep2;
}

void Trainer::begin_step3() {
  if (phase_ == Phase::kStep1) {
    throw ConfigError("phase violation: step 3 requires step 1 to be completed");
  }
  phase_ = Phase::kStep3;
}

std::vector<const Example*> Trainer::next_batch() {
  std::vector<const Example*> batch;
  while (static_cast<int>(batch.size()) < config_.batch_size) {
    if (cursor_ == 0 || cursor_ >= order_.size()) {
      order_ = examples_;
      Rng rng(derive_seed(config_.seed, 1000 + epoch_++));
      rng.shuffle(order_);
      cursor_ = 0;
    }
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

std::map<std::string, double> Trainer::step1(const std::vector<const Example*>& batch) {
  if (phase_ != Phase::kStep1) {
    throw ConfigError("phase violation: step 1 updates are closed once step 1 is completed");
  }
  require_batch(batch);
  const double w = 1.0 / static_cast<double>(batch.size());
  model_.params().zero_grad();
  std::map<std::string, double> values;
  for (const Example* ex : batch) {
    const ForwardOutputs out = model_.forward(ex->features);
    const Step1Losses l = step1_losses(out, *ex);
    const Var total = l.total();
    nn::backward(nn::scale(total, w));
    accumulate(values, l.values(), w);
  }
  all_opt_->step();
  return values;
}

std::map<std::string, double> Trainer::critic_update(const std::vector<const Example*>& batch) {
  require_batch(batch);
  std::vector<Tensor> real, fake;
  {
    nn::NoGradGuard guard;
    for (const Example* ex : batch) {
      real.push_back(to_tensor(ex->l_c.values));
      fake.push_back(model_.forward(ex->features).l_c.value());
    }
  }
  critics_.params().zero_grad();
  std::map<std::string, double> values;
  for (const losses::Critic* c : critics_.critics().all()) {
    const losses::WganDTerms t =
        losses::wgan_gp_d_loss(*c, real, fake, config_.gp_gamma, d_rng_);
    nn::backward(t.loss);
    values["d_loss"] += t.loss.value()[0];
    values["wasserstein"] += t.wasserstein;
    values["penalty"] += t.penalty;
  }
  critic_opt_->step();
  return values;
}

std::map<std::string, double> Trainer::step2(const std::vector<const Example*>& batch) {
  if (phase_ != Phase::kStep2) {
    throw ConfigError(phase_ == Phase::kStep1
                          ? "phase violation: step 2 requires step 1 to be completed"
                          : "phase violation: step 2 follows step 1 and precedes step 3");
  }
  return critic_update(batch);
}

std::map<std::string, double> Trainer::step3(const std::vector<const Example*>& batch) {
  begin_step3();
  std::map<std::string, double> values = critic_update(batch);
  std::vector<Var> fakes;
  std::vector<Var> targets;
  {
    std::vector<ForwardOutputs> outs;
    {
      nn::NoGradGuard guard;
      for (const Example* ex : batch) outs.push_back(model_.forward(ex->features));
    }
    model_.params().zero_grad();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      fakes.push_back(
          model_.post(Var(outs[i].l_tilde.value()), Var(outs[i].token.value())));
      targets.push_back(Var(to_tensor(batch[i]->l_c.values)));
    }
  }
  Var g_adv;
  for (const losses::Critic* c : critics_.critics().all()) {
    Var term = losses::wgan_g_loss(*c, fakes);
    g_adv = g_adv.defined() ? nn::add(g_adv, term) : term;
  }
  const double w = 1.0 / static_cast<double>(batch.size());
  Var l_c;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Var term = nn::scale(losses::mse(targets[i], fakes[i]), w);
    l_c = l_c.defined() ? nn::add(l_c, term) : term;
  }
  const Var total = nn::add(g_adv, nn::scale(l_c, config_.lambda_c));
  nn::backward(total);
  post_opt_->step();
  values["g_adv"] = g_adv.value()[0];
  values["l_c"] = l_c.value()[0];
  values["total"] = total.value()[0];
  return values;
}

void Trainer::record(const std::string& phase, int step, const std::map<std::string, double>& v,
                     const Logger& logger) {
  LossRow row{phase, step, v};
  if (logger) logger(row);
  log_.push_back(std::move(row));
}

void Trainer::run(const Logger& logger) {
  for (int s = 1; s <= config_.step1_steps; ++s) {
    const double progress = config_.step1_steps > 1
                                ? static_cast<double>(s - 1) / (config_.step1_steps - 1)
                                : 0.0;
    const double ratio = config_.lr_final_ratio +
                         (1.0 - config_.lr_final_ratio) * 0.5 *
                             (1.0 + std::cos(std::numbers::pi * progress));
    all_opt_->set_lr(config_.lr * ratio);
    const auto v = step1(next_batch());
    if (s % config_.log_every == 0 || s == 1 || s == config_.step1_steps) {
      record("step1", s, v, logger);
    }
  }
  complete_step1();
  for (int s = 1; s <= config_.step2_steps; ++s) {
    const auto v = step2(next_batch());
    if (s % config_.log_every == 0 || s == 1 || s == config_.step2_steps) {
      record("step2", s, v, logger);
    }
  }
  for (int s = 1; s <= config_.step3_steps; ++s) {
    const auto v = step3(next_batch());
    if (s % config_.log_every == 0 || s == 1 || s == config_.step3_steps) {
      record("step3", s, v, logger);
    }
  }
}

namespace {

std::vector<const Example*> cyclic_batch(const std::vector<const Example*>& examples,
                                         int step, int batch_size) {
  std::vector<const Example*> batch;
  for (int i = 0; i < batch_size; ++i) {
    batch.push_back(examples[(static_cast<std::size_t>(step) * batch_size + i) %
                             examples.size()]);
  }
  return batch;
}

bool should_log(int s, const TrainConfig& c, int total) {
  return s % c.log_every == 0 || s == 1 || s == total;
}

}  // namespace

void train_bwe(BweFreModels& models, const TrainConfig& config,
               const std::vector<const Example*>& examples, std::vector<LossRow>& log) {
  config.validate();
  require_batch(examples);
  round_params_to_float32(models.params());
  nn::Adam g_opt(models.params().trainable(kBwe), adam_options(config.lr));
  nn::Adam d_opt(models.params().trainable(kBweCritic), adam_options(config.critic_lr));
  Rng rng(derive_seed(config.seed, 0xB));
  const double w = 1.0 / static_cast<double>(config.batch_size);
  for (int s = 1; s <= config.bwe_steps; ++s) {
    const auto batch = cyclic_batch(examples, s - 1, config.batch_size);
    std::vector<Tensor> narrow, high, fake;
    for (const Example* ex : batch) {
      const auto [nb, hb] = enhance::band_split(ex->l_c, models.layout());
      narrow.push_back(to_tensor(nb.values));
      high.push_back(to_tensor(hb.values));
    }
    std::map<std::string, double> values;
    {
      nn::NoGradGuard guard;
      for (const Tensor& t : narrow) fake.push_back(models.bwe(Var(t)).value());
    }
    models.params().zero_grad();
    for (const losses::Critic* c : models.critics().all()) {
      const auto t = losses::wgan_gp_d_loss(*c, high, fake, config.gp_gamma, rng);
      nn::backward(t.loss);
      values["d_loss"] += t.loss.value()[0];
      values["wasserstein"] += t.wasserstein;
      values["penalty"] += t.penalty;
    }
    d_opt.step();
    models.params().zero_grad();
    std::vector<Var> fakes;
    Var mse;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      fakes.push_back(models.bwe(Var(narrow[i])));
      Var term = nn::scale(losses::mse(Var(high[i]), fakes.back()), w);
      mse = mse.defined() ? nn::add(mse, term) : term;
    }
    Var g_adv;
    for (const losses::Critic* c : models.critics().all()) {
      Var term = losses::wgan_g_loss(*c, fakes);
      g_adv = g_adv.defined() ? nn::add(g_adv, term) : term;
    }
    const Var total = nn::add(g_adv, nn::scale(mse, config.lambda_c));
    nn::backward(total);
    g_opt.step();
    values["g_adv"] = g_adv.value()[0];
    values["l_bwe"] = mse.value()[0];
    values["total"] = total.value()[0];
    if (should_log(s, config, config.bwe_steps)) log.push_back({"bwe", s, values});
  }
}

void train_fre(BweFreModels& models, const TrainConfig& config,
               const std::vector<const Example*>& examples, std::vector<LossRow>& log) {
  config.validate();
  require_batch(examples);
  round_params_to_float32(models.params());
  nn::Adam opt(models.params().trainable(kFre), adam_options(config.lr));
  const double w = 1.0 / static_cast<double>(config.batch_size);
  for (int s = 1; s <= config.fre_steps; ++s) {
    const auto batch = cyclic_batch(examples, s - 1, config.batch_size);
    models.params().zero_grad();
    double value = 0.0;
    for (const Example* ex : batch) {
      if (ex->l_c_fine.num_bins() != models.layout().k_fine) {
        throw ShapeError("FRE target has " + std::to_string(ex->l_c_fine.num_bins()) +
                         " bins, expected " + std::to_string(models.layout().k_fine));
      }
      const Var loss =
          nn::scale(losses::mse(Var(to_tensor(ex->l_c_fine.values)), models.fre(ex->l_c)), w);
      nn::backward(loss);
      value += loss.value()[0];
    }
    opt.step();
    if (should_log(s, config, config.fre_steps)) log.push_back({"fre", s, {{"l_fre", value}}});
  }
}

}  // namespace dnr::model
