// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_MODEL_TRAINER_H_
#define DNR_MODEL_TRAINER_H_

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dnr/losses/losses.h"
#include "dnr/model/bwe_fre.h"
#include "dnr/model/critics.h"
#include "dnr/model/dnr_asp.h"
#include "dnr/nn/adam.h"

namespace dnr::model {

struct Step1Losses {
  nn::Var l_nr, l_ne, l_rc, l_rs, l_i, l_c;

  // Unit-weighted sum.
  nn::Var total() const;
  std::map<std::string, double> values() const;
};

// Each term reads only the prediction and supervision it names.
Step1Losses step1_losses(const ForwardOutputs& out, const Example& example,
                         const std::vector<losses::StftScale>& scales =
                             losses::default_stft_scales());

// One logged training iteration. Missing columns are written empty.
struct LossRow {
  std::string phase;
  int step = 0;
  std::map<std::string, double> values;
};

const std::vector<std::string>& loss_columns();
std::string format_loss_csv(const std::vector<LossRow>& rows);
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRow>& rows);

enum class Phase { kStep1, kStep2, kStep3 };

class Trainer {
 public:
  using Logger = std::function<void(const LossRow&)>;

  Trainer(DnrAspModel& model, CriticBundle& critics, const TrainConfig& config,
          std::vector<const Example*> examples);

  Phase phase() const { return phase_; }
  // Marks step 1 as finished; steps 2 and 3 are rejected before this.
  void complete_step1();
  void begin_step3();

  // One optimizer update each. Return the logged values.
  std::map<std::string, double> step1(const std::vector<const Example*>& batch);
  std::map<std::string, double> step2(const std::vector<const Example*>& batch);
  std::map<std::string, double> step3(const std::vector<const Example*>& batch);

  // Next batch in a seeded epoch-wise shuffle.
  std::vector<const Example*> next_batch();

  // Runs the configured step counts of all three steps.
  void run(const Logger& logger = {});

  const std::vector<LossRow>& log() const { return log_; }

 private:
  std::map<std::string, double> critic_update(const std::vector<const Example*>& batch);
  void record(const std::string& phase, int step, const std::map<std::string, double>& v,
              const Logger& logger);

  DnrAspModel& model_;
  CriticBundle& critics_;
  TrainConfig config_;
  std::vector<const Example*> examples_;
  Phase phase_ = Phase::kStep1;
  std::unique_ptr<nn::Adam> all_opt_, post_opt_, critic_opt_;
  std::vector<const Example*> order_;
  std::size_t cursor_ = 0;
  int epoch_ = 0;
  Rng d_rng_;
  std::vector<LossRow> log_;
};

// Rounds every entry to float32 so saved weights reproduce live values.
void round_params_to_float32(nn::ParamStore& store);

// BWE: MSE plus WGAN-GP against true high bands. FRE: MSE only.
void train_bwe(BweFreModels& models, const TrainConfig& config,
               const std::vector<const Example*>& examples, std::vector<LossRow>& log);
void train_fre(BweFreModels& models, const TrainConfig& config,
               const std::vector<const Example*>& examples, std::vector<LossRow>& log);

}  // namespace dnr::model

#endif  // DNR_MODEL_TRAINER_H_
