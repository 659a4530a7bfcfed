// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_MODEL_PIPELINE_H_
#define DNR_MODEL_PIPELINE_H_

#include <filesystem>

#include "dnr/enhance/spectral.h"
#include "dnr/model/bwe_fre.h"
#include "dnr/model/dnr_asp.h"

namespace dnr::model {

struct EnhanceOptions {
  enhance::PhaseSource phase = enhance::PhaseSource::kNoisy;
  enhance::GriffinLimOptions griffin_lim;
};

struct EnhanceResult {
  signal::Las las;  // 1025 bins, or 4097 with BWE/FRE
  signal::Waveform audio;
};

// Forward pass to the clean LAS estimate, optional band and resolution
// extension, then waveform reconstruction with the requested phase.
EnhanceResult enhance(const DnrAspModel& model, const BweFreModels* bwe_fre,
                      const signal::Waveform& degraded, const EnhanceOptions& options = {});

// Checkpoint file names inside a checkpoint directory.
inline constexpr const char* kModelWeights = "dnr_asp.dnrw";
inline constexpr const char* kCriticWeights = "critics.dnrw";
inline constexpr const char* kBweFreWeights = "bwe_fre.dnrw";

}  // namespace dnr::model

#endif  // DNR_MODEL_PIPELINE_H_
