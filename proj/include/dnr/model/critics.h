// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_MODEL_CRITICS_H_
#define DNR_MODEL_CRITICS_H_

#include <string>
#include <vector>

#include "dnr/losses/wgan.h"
#include "dnr/model/config.h"
#include "dnr/nn/param_store.h"

namespace dnr::model {

// One critic convolving along time (bins as channels) and one along
// frequency, both scoring [N, bins] LAS.
class SpectralCritics {
 public:
  SpectralCritics(nn::ParamStore& store, const std::string& prefix, std::int64_t bins,
                  const ModelConfig& config, Rng& rng);

  const losses::ConvCritic& time() const { return time_; }
  const losses::ConvCritic& frequency() const { return frequency_; }
  std::vector<const losses::Critic*> all() const { return {&time_, &frequency_}; }
  std::vector<nn::Var> parameters() const;

 private:
  losses::ConvCritic time_;
  losses::ConvCritic frequency_;
};

// Critics with their own parameter store.
class CriticBundle {
 public:
  CriticBundle(const ModelConfig& config, std::int64_t bins, std::uint64_t seed)
      : rng_(seed), critics_(store_, "critic/", bins, config, rng_) {}
  CriticBundle(const CriticBundle&) = delete;
  CriticBundle& operator=(const CriticBundle&) = delete;

  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const SpectralCritics& critics() const { return critics_; }

 private:
  nn::ParamStore store_;
  Rng rng_;
  SpectralCritics critics_;
};

}  // namespace dnr::model

#endif  // DNR_MODEL_CRITICS_H_
