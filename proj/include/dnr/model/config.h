// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_MODEL_CONFIG_H_
#define DNR_MODEL_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

namespace dnr::model {

enum class Scale { kDesk, kPaper };

std::string scale_name(Scale s);
Scale parse_scale(const std::string& text);

// Layer widths. A recurrent hidden size of 0 omits that layer.
struct ModelConfig {
  int fft_size = 2048;
  int rir_length = 2048;
  int mel_dim = 80;

  int enc_gru_hidden = 40;
  std::vector<int> enc_channels = {4, 8, 8, 16, 32};
  int enc_kt = 5;
  int enc_kf = 5;
  int num_templates = 16;
  int heads = 8;

  int converter_width = 256;
  int converter_taps = 7;
  int noise_width = 128;
  int noise_taps = 7;
  int alpha_width = 32;
  int alpha_taps = 5;
  int reverb_gru_hidden = 16;
  int reverb_width = 128;
  int reverb_taps = 9;
  int post_gru_hidden = 64;
  int post_width = 256;
  int post_taps = 7;

  std::vector<int> critic_time_channels = {64, 64};
  std::vector<int> critic_freq_channels = {16, 16};
  int critic_taps = 5;

  int bf_gru_hidden = 64;
  int bf_width = 256;
  int bf_taps = 9;

  int bins() const { return fft_size / 2 + 1; }
  int token_dim() const { return enc_channels.empty() ? 0 : enc_channels.back(); }
  int acoustic_dim() const { return mel_dim + 2; }

  void validate() const;

  static ModelConfig desk();
  static ModelConfig paper();
  // No recurrence and one-tap convolutions: every pre-pooling stage acts
  // on frames independently.
  static ModelConfig frame_wise();
  static ModelConfig for_scale(Scale s);

  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  Scale scale = Scale::kDesk;
  std::uint64_t seed = 1;
  double lr = 1e-4;
  // Step 1 cosine-anneals the learning rate from lr to lr * lr_final_ratio;
  // step 3 uses the final rate.
  double lr_final_ratio = 1.0;
  double critic_lr = 1e-4;
  int batch_size = 1;
  int step1_steps = 500;
  int step2_steps = 50;
  int step3_steps = 50;
  int bwe_steps = 0;
  int fre_steps = 0;
  double lambda_c = 500.0;
  double gp_gamma = 10.0;
  int log_every = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

}  // namespace dnr::model

#endif  // DNR_MODEL_CONFIG_H_
