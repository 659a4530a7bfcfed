// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_CLI_RUN_CONFIG_H_
#define DNR_CLI_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dnr/degrade/corpus.h"
#include "dnr/model/config.h"
#include "dnr/signal/stft.h"

namespace dnr::cli {

// Plain-text "key = value" configuration. '#' starts a comment.
struct RunConfig {
  int sample_rate = 24000;
  double frame_length_ms = 50.0;
  double frame_shift_ms = 12.0;
  int fft_size = 2048;
  int fine_fft_size = 8192;
  std::string window = "hann";

  model::TrainConfig train;
  // "train", "valid", "test" or "all".
  std::string train_split = "train";
  // 0 uses every selected utterance.
  int max_utterances = 0;
  int griffin_lim_iters = 60;

  std::string manifest;
  std::string checkpoint_dir;

  signal::StftConfig stft() const;
  model::ModelConfig model() const { return model::ModelConfig::for_scale(train.scale); }
  std::optional<degrade::Split> split() const;
  // Rejects contradictions and values the pipeline cannot run with.
  void validate() const;
};

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string doc;
};

// Every key with its default, in file order.
const std::vector<ConfigKey>& config_keys();

// Unknown keys, repeated keys and malformed values are ConfigErrors.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
// Every key, one per line; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& c);
// Commented reference listing each key, its default and meaning.
std::string config_reference();

// DNR_SEED, when set, replaces the configured seed.
void apply_environment(RunConfig& c);

// Output directories receive the effective configuration as this file.
inline constexpr const char* kConfigEcho = "run_config.txt";
void echo_config(const std::filesystem::path& dir, const RunConfig& c);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace dnr::cli

#endif  // DNR_CLI_RUN_CONFIG_H_
