// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/model/critics.h"

namespace dnr::model {

namespace {

std::vector<std::int64_t> widths(const std::vector<int>& c) {
  return std::vector<std::int64_t>(c.begin(), c.end());
}

}  // namespace

SpectralCritics::SpectralCritics(nn::ParamStore& store, const std::string& prefix,
                                 std::int64_t bins, const ModelConfig& config, Rng& rng)
    : time_(store, prefix + "time", losses::CriticAxis::kTime, bins,
            widths(config.critic_time_channels), config.critic_taps, rng),
      frequency_(store, prefix + "frequency", losses::CriticAxis::kFrequency, bins,
                 widths(config.critic_freq_channels), config.critic_taps, rng) {}

std::vector<nn::Var> SpectralCritics::parameters() const {
  std::vector<nn::Var> out = time_.parameters();
  for (const auto& v : frequency_.parameters()) out.push_back(v);
  return out;
}

}  // namespace dnr::model
