// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_MODEL_DNR_ASP_H_
#define DNR_MODEL_DNR_ASP_H_

#include <optional>
#include <string>
#include <vector>

#include "dnr/common/random.h"
#include "dnr/model/config.h"
#include "dnr/model/example.h"
#include "dnr/nn/layers.h"
#include "dnr/nn/param_store.h"

namespace dnr::model {

// Parameter name prefixes of the five trainable submodules.
inline constexpr const char* kChannelEncoder = "channel_encoder/";
inline constexpr const char* kConverter = "converter/";
inline constexpr const char* kNoiseEncoder = "noise_encoder/";
inline constexpr const char* kReverbEncoder = "reverb_encoder/";
inline constexpr const char* kPostModule = "post_module/";
inline constexpr const char* kNorm = "norm/";

std::vector<std::string> submodule_prefixes();

struct ForwardOptions {
  // Replace the predicted alpha or RIR before the initial operation.
  std::optional<double> alpha_override;
  std::optional<std::vector<double>> rir_override;
};

struct ForwardOutputs {
  nn::Var token;    // [1, D]
  nn::Var l_nr;     // [N, K]
  nn::Var l_ne;     // [N, K]
  nn::Var alpha;    // [1]
  nn::Var r_hat;    // [FN]
  nn::Var l_tilde;  // [N, K]
  nn::Var l_c;      // [N, K]
};

class DnrAspModel {
 public:
  DnrAspModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  void set_norm_stats(const NormStats& stats);

  ForwardOutputs forward(const signal::AcousticFeatures& features,
                         const ForwardOptions& options = {}) const;

  // Channel-encoder token alone.
  nn::Var token(const signal::AcousticFeatures& features) const;
  // Post module given l_tilde and token.
  nn::Var post(const nn::Var& l_tilde, const nn::Var& token) const;

 private:
  nn::Var acoustic_input(const signal::AcousticFeatures& features) const;

  ModelConfig config_;
  nn::ParamStore store_;

  nn::Var mel_mean_, mel_std_, lf0_stats_;
  nn::Var nr_mean_, nr_std_, ne_mean_, ne_std_, c_mean_, c_std_;

  // Channel encoder.
  std::optional<nn::BiGru> enc_gru_;
  std::vector<nn::Conv2d> enc_convs_;
  nn::TemplateAttention attention_;
  // Converter.
  nn::Conv1d conv_c1_, conv_c2_;
  nn::Dense conv_out_;
  // Noise encoder.
  nn::Conv1d noise_c1_, noise_c2_;
  nn::Dense noise_out_;
  nn::Conv1d alpha_conv_;
  nn::Dense alpha_out_;
  // Reverberation encoder.
  std::optional<nn::BiGru> rev_gru_;
  nn::Conv1d rev_conv_;
  nn::Dense rev_out_;
  // Post module.
  std::optional<nn::BiGru> post_gru_;
  nn::Dense post_in_;
  nn::Conv1d post_c1_, post_c2_;
  nn::Dense post_out_;
};

// Convert between Var values and spectral types.
signal::Las to_las(const nn::Var& v, int fft_size);
nn::Tensor to_tensor(const Matrix& m);
degrade::Rir to_rir(const nn::Var& v);

}  // namespace dnr::model

#endif  // DNR_MODEL_DNR_ASP_H_
