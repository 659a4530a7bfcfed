// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/cli/run_config.h"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dnr/common/error.h"

namespace dnr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

struct Field {
  ConfigKey info;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(std::string key, std::string doc, T RunConfig::*member) {
  return {{key, "", doc},
          [key, member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt(c.*member);
            else return std::to_string(c.*member);
          }};
}

template <typename T>
Field train_number(std::string key, std::string doc, T model::TrainConfig::*member) {
  return {{key, "", doc},
          [key, member](RunConfig& c, const std::string& v) {
            c.train.*member = parse_number<T>(key, v);
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt(c.train.*member);
            else return std::to_string(c.train.*member);
          }};
}

Field text(std::string key, std::string doc, std::string RunConfig::*member) {
  return {{key, "", doc},
          [member](RunConfig& c, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v = {
        number("sample_rate", "audio sample rate in Hz (only 24000 is supported)",
               &RunConfig::sample_rate),
        number("frame_length_ms", "STFT frame length", &RunConfig::frame_length_ms),
        number("frame_shift_ms", "STFT frame shift", &RunConfig::frame_shift_ms),
        number("fft_size", "analysis FFT size; 1025 bins (only 2048 is supported)",
               &RunConfig::fft_size),
        number("fine_fft_size", "FRE target FFT size; 4097 bins (only 8192 is supported)",
               &RunConfig::fine_fft_size),
        text("window", "analysis window: hann, hamming or rectangular", &RunConfig::window),
        {{"scale", "", "model widths: desk or paper"},
         [](RunConfig& c, const std::string& v) { c.train.scale = model::parse_scale(v); },
         [](const RunConfig& c) { return model::scale_name(c.train.scale); }},
        train_number("seed", "global seed; DNR_SEED overrides it", &model::TrainConfig::seed),
        train_number("lr", "Adam learning rate for the DNR-ASP", &model::TrainConfig::lr),
        train_number("lr_final_ratio",
                     "step 1 cosine-anneals the learning rate to lr * lr_final_ratio; step 3 uses the final rate",
                     &model::TrainConfig::lr_final_ratio),
        train_number("critic_lr", "Adam learning rate for the critics",
                     &model::TrainConfig::critic_lr),
        train_number("batch_size", "utterances per update", &model::TrainConfig::batch_size),
        train_number("step1_steps", "updates of the whole model on the summed losses",
                     &model::TrainConfig::step1_steps),
        train_number("step2_steps", "critic-only updates", &model::TrainConfig::step2_steps),
        train_number("step3_steps", "alternating critic / post-module updates",
                     &model::TrainConfig::step3_steps),
        train_number("bwe_steps", "band extension updates (0 skips BWE)",
                     &model::TrainConfig::bwe_steps),
        train_number("fre_steps", "resolution extension updates (0 skips FRE)",
                     &model::TrainConfig::fre_steps),
        train_number("lambda_c", "weight of the clean LAS MSE in adversarial steps",
                     &model::TrainConfig::lambda_c),
        train_number("gp_gamma", "gradient penalty weight", &model::TrainConfig::gp_gamma),
        train_number("log_every", "log every n-th update", &model::TrainConfig::log_every),
        text("train_split", "manifest split used for training: train, valid, test or all",
             &RunConfig::train_split),
        number("max_utterances", "cap on training utterances (0 = no cap)",
               &RunConfig::max_utterances),
        number("griffin_lim_iters", "phase recovery iterations", &RunConfig::griffin_lim_iters),
        text("manifest", "default manifest path when --manifest is absent", &RunConfig::manifest),
        text("checkpoint_dir", "default checkpoint directory when --checkpoint-dir is absent",
             &RunConfig::checkpoint_dir),
    };
    const RunConfig defaults;
    for (auto& f : v) f.info.default_value = f.get(defaults);
    return v;
  }();
  return f;
}

}  // namespace

signal::StftConfig RunConfig::stft() const {
  signal::StftConfig s;
  s.sample_rate = sample_rate;
  s.frame_length_ms = frame_length_ms;
  s.frame_shift_ms = frame_shift_ms;
  s.fft_size = fft_size;
  s.window = signal::parse_window(window);
  return s;
}

std::optional<degrade::Split> RunConfig::split() const {
  if (train_split == "all") return std::nullopt;
  return degrade::parse_split(train_split);
}

void RunConfig::validate() const {
  const signal::StftConfig s = stft();
  s.validate();
  if (!(s == signal::StftConfig{})) {
    throw ConfigError(
        "the model is built for 24000 Hz audio with 50 ms / 12 ms hann frames and a "
        "2048-point FFT; got " +
        std::to_string(sample_rate) + " Hz, " + fmt(frame_length_ms) + " ms / " +
        fmt(frame_shift_ms) + " ms " + window + ", fft " + std::to_string(fft_size));
  }
  if (fine_fft_size != 8192) throw ConfigError("fine_fft_size must be 8192");
  train.validate();
  split();
  if (max_utterances < 0) throw ConfigError("max_utterances must be >= 0");
  if (griffin_lim_iters < 1) throw ConfigError("griffin_lim_iters must be >= 1");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& f : fields()) out.push_back(f.info);
    return out;
  }();
  return keys;
}

RunConfig parse_run_config(const std::string& body) {
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key[f.info.key] = &f;
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream is(body);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw ConfigError("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(number) + ": repeated key '" + key + "'");
    }
    it->second->set(c, value);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string format_run_config(const RunConfig& c) {
  std::string out;
  for (const auto& f : fields()) out += f.info.key + " = " + f.get(c) + "\n";
  return out;
}

std::string config_reference() {
  std::string out;
  for (const auto& k : config_keys()) {
    out += "# " + k.doc + "\n" + k.key + " = " + k.default_value + "\n";
  }
  return out;
}

void apply_environment(RunConfig& c) {
  if (const char* s = std::getenv("DNR_SEED"); s != nullptr && *s != '\0') {
    c.train.seed = parse_number<std::uint64_t>("DNR_SEED", s);
  }
}

void echo_config(const std::filesystem::path& dir, const RunConfig& c) {
  std::filesystem::create_directories(dir);
  const auto path = dir / kConfigEcho;
  const auto tmp = dir / (std::string(kConfigEcho) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << format_run_config(c);
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return format_run_config(a) == format_run_config(b);
}

}  // namespace dnr::cli
