// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/model/config.h"

#include "dnr/common/error.h"

namespace dnr::model {

std::string scale_name(Scale s) { return s == Scale::kDesk ? "desk" : "paper"; }

Scale parse_scale(const std::string& text) {
  if (text == "desk") return Scale::kDesk;
  if (text == "paper") return Scale::kPaper;
  throw ConfigError("unknown model scale '" + text + "' (expected desk or paper)");
}

namespace {

void require_positive(int v, const char* name) {
  if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
}

void require_odd(int v, const char* name) {
  require_positive(v, name);
  if (v % 2 == 0) throw ConfigError(std::string(name) + " must be odd");
}

}  // namespace

void ModelConfig::validate() const {
  if (fft_size < 2 || fft_size % 2 != 0) throw ConfigError("fft_size must be even");
  if (rir_length < 2 || rir_length % 2 != 0) throw ConfigError("rir_length must be even");
  if (rir_length / 2 + 1 != bins()) {
    throw ConfigError("rir_length must equal fft_size so RIR magnitudes align with LAS bins");
  }
  require_positive(mel_dim, "mel_dim");
  if (enc_gru_hidden < 0 || reverb_gru_hidden < 0 || post_gru_hidden < 0 ||
      bf_gru_hidden < 0) {
    throw ConfigError("recurrent hidden sizes must be nonnegative");
  }
  if (enc_channels.empty()) throw ConfigError("channel encoder needs at least one layer");
  for (int c : enc_channels) require_positive(c, "enc_channels");
  require_odd(enc_kt, "enc_kt");
  require_odd(enc_kf, "enc_kf");
  require_positive(num_templates, "num_templates");
  require_positive(heads, "heads");
  if (token_dim() % heads != 0) {
    throw ConfigError("token dimension " + std::to_string(token_dim()) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  }
  require_positive(converter_width, "converter_width");
  require_odd(converter_taps, "converter_taps");
  require_positive(noise_width, "noise_width");
  require_odd(noise_taps, "noise_taps");
  require_positive(alpha_width, "alpha_width");
  require_odd(alpha_taps, "alpha_taps");
  require_positive(reverb_width, "reverb_width");
  require_odd(reverb_taps, "reverb_taps");
  require_positive(post_width, "post_width");
  require_odd(post_taps, "post_taps");
  for (int c : critic_time_channels) require_positive(c, "critic_time_channels");
  for (int c : critic_freq_channels) require_positive(c, "critic_freq_channels");
  require_odd(critic_taps, "critic_taps");
  require_positive(bf_width, "bf_width");
  require_odd(bf_taps, "bf_taps");
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.enc_channels = {32, 64, 64, 128, 256};
  c.converter_width = 2048;
  c.noise_width = 1024;
  c.alpha_width = 256;
  c.reverb_gru_hidden = 128;
  c.reverb_width = 1024;
  c.post_gru_hidden = 512;
  c.post_width = 2048;
  c.critic_time_channels = {512, 512};
  c.critic_freq_channels = {128, 128};
  c.bf_gru_hidden = 512;
  c.bf_width = 2048;
  return c;
}

ModelConfig ModelConfig::frame_wise() {
  ModelConfig c;
  c.enc_gru_hidden = 0;
  c.enc_kt = 1;
  c.converter_taps = 1;
  c.noise_taps = 1;
  c.alpha_taps = 1;
  c.reverb_gru_hidden = 0;
  c.reverb_taps = 1;
  c.post_gru_hidden = 0;
  c.post_taps = 1;
  return c;
}

ModelConfig ModelConfig::for_scale(Scale s) { return s == Scale::kDesk ? desk() : paper(); }

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(lr_final_ratio >= 0.0 && lr_final_ratio <= 1.0)) {
    throw ConfigError("lr_final_ratio must lie in [0, 1]");
  }
  require_positive(batch_size, "batch_size");
  if (step1_steps < 0 || step2_steps < 0 || step3_steps < 0 || bwe_steps < 0 ||
      fre_steps < 0) {
    throw ConfigError("step counts must be nonnegative");
  }
  if (!(lambda_c >= 0.0)) throw ConfigError("lambda_c must be nonnegative");
  if (!(gp_gamma >= 0.0)) throw ConfigError("gp_gamma must be nonnegative");
  require_positive(log_every, "log_every");
}

}  // namespace dnr::model
