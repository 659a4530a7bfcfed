// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/model/pipeline.h"

namespace dnr::model {

EnhanceResult enhance(const DnrAspModel& model, const BweFreModels* bwe_fre,
                      const signal::Waveform& degraded, const EnhanceOptions& options) {
  const int fft = model.config().fft_size;
  const Inputs in = make_inputs(degraded, fft);
  signal::Las las;
  {
    nn::NoGradGuard guard;
    las = to_las(model.forward(in.features).l_c, fft);
  }
  if (bwe_fre != nullptr) las = bwe_fre->extend(las);
  EnhanceResult r;
  r.audio = enhance::reconstruct(las, options.phase, &degraded, options.griffin_lim);
  r.las = std::move(las);
  return r;
}

}  // namespace dnr::model
