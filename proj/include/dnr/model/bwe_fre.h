// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_MODEL_BWE_FRE_H_
#define DNR_MODEL_BWE_FRE_H_

#include <optional>

#include "dnr/enhance/spectral.h"
#include "dnr/model/config.h"
#include "dnr/model/critics.h"
#include "dnr/model/example.h"
#include "dnr/nn/layers.h"
#include "dnr/nn/param_store.h"

namespace dnr::model {

inline constexpr const char* kBwe = "bwe/";
inline constexpr const char* kFre = "fre/";
inline constexpr const char* kBweCritic = "bwe_critic/";

// Two bidirectional GRU layers, two convolutions and a linear output.
class BandStack {
 public:
  BandStack() = default;
  BandStack(nn::ParamStore& store, const std::string& prefix, std::int64_t in,
            std::int64_t out, const ModelConfig& config, Rng& rng, nn::Init out_init);
  nn::Var operator()(const nn::Var& x) const;

 private:
  std::optional<nn::BiGru> gru0_, gru1_;
  nn::Conv1d conv0_, conv1_;
  nn::Dense out_;
};

class BweFreModels {
 public:
  BweFreModels(const ModelConfig& config, std::uint64_t seed,
               const enhance::BandLayout& layout = {});

  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const enhance::BandLayout& layout() const { return layout_; }
  const SpectralCritics& critics() const { return critics_; }

  // Uses the clean full-band and fine statistics.
  void set_norm_stats(const NormStats& stats);

  // [N, k_nb] -> [N, k_full - k_nb + 1].
  nn::Var bwe(const nn::Var& narrow) const;
  // [N, k_full] -> [N, k_fine]: linear interpolation plus a learned residual.
  nn::Var fre(const signal::Las& full) const;

  // Narrow band -> merged full band -> fine LAS.
  signal::Las extend(const signal::Las& full) const;

 private:
  ModelConfig config_;
  enhance::BandLayout layout_;
  nn::ParamStore store_;
  nn::Var full_mean_, full_std_, fine_std_;
  BandStack bwe_, fre_;
  Rng critic_rng_;
  SpectralCritics critics_;
};

}  // namespace dnr::model

#endif  // DNR_MODEL_BWE_FRE_H_
