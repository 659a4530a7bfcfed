// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dnr/cli/commands.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnr/cli/image.h"
#include "dnr/cli/run_config.h"
#include "dnr/cli/selfcheck.h"
#include "dnr/common/random.h"
#include "dnr/degrade/corpus.h"
#include "dnr/degrade/sources.h"
#include "dnr/metrics/report.h"
#include "dnr/model/bwe_fre.h"
#include "dnr/model/critics.h"
#include "dnr/model/dnr_asp.h"
#include "dnr/model/example.h"
#include "dnr/model/pipeline.h"
#include "dnr/model/trainer.h"
#include "dnr/nn/param_store.h"
#include "dnr/signal/wav_io.h"

namespace dnr::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The exception of the
// lowest failing index is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void require_dir(const std::string& flag, const fs::path& p) {
  if (!fs::is_directory(p)) throw IoError(flag + ": no such directory " + p.string());
}

void require_file(const std::string& flag, const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError(flag + ": no such file " + p.string());
}

std::optional<degrade::Split> parse_split_flag(const std::string& s) {
  if (s == "all") return std::nullopt;
  return degrade::parse_split(s);
}

std::vector<degrade::CorpusEntry> select(const degrade::Manifest& m,
                                         const std::optional<degrade::Split>& split) {
  auto out = split ? m.split(*split) : m.entries;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (out.empty()) throw ConfigError("no manifest entries in the selected split");
  return out;
}

Json means_json(const metrics::MetricMeans& m) {
  return {{"stoi", m.stoi}, {"lsd_db", m.lsd_db}, {"segsnr_db", m.segsnr_db}, {"count", m.count}};
}

// Options shared by commands that take a configuration.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  RunConfig resolve(const std::optional<fs::path>& fallback = std::nullopt) const {
    RunConfig c;
    if (!config_path.empty()) {
      c = load_run_config(config_path);
    } else if (fallback && fs::exists(*fallback)) {
      c = load_run_config(*fallback);
    }
    apply_environment(c);
    if (seed) c.train.seed = *seed;
    c.validate();
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  cmd->add_option("--config", c.config_path, "key = value configuration file");
  if (with_seed) cmd->add_option("--seed", c.seed, "overrides the config seed and DNR_SEED");
  cmd->add_option("--jobs", c.jobs, "worker thread cap")->capture_default_str()->check(
      CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------

struct SynthesizeArgs {
  Common common;
  std::string clean_dir, noise_dir, rir_dir, out;
  std::string snr_list = "0,5,10,15";
  std::string splits = "8/1/1";
};

Json cmd_synthesize(const SynthesizeArgs& a, std::ostream& err) {
  const RunConfig cfg = a.common.resolve();
  degrade::CorpusOptions o;
  o.clean_dir = a.clean_dir;
  o.noise_dir = a.noise_dir;
  o.rir_dir = a.rir_dir;
  o.out_dir = a.out;
  o.snr_list = degrade::parse_snr_list(a.snr_list);
  o.splits = degrade::parse_split_spec(a.splits);
  o.seed = cfg.train.seed;
  o.jobs = a.common.jobs;
  require_dir("--clean-dir", o.clean_dir);
  require_dir("--noise-dir", o.noise_dir);
  require_dir("--rir-dir", o.rir_dir);
  err << "synthesizing corpus into " << a.out << "\n";
  const degrade::Manifest m = degrade::synthesize_corpus(o);
  echo_config(a.out, cfg);
  Json counts = Json::object();
  for (auto s : {degrade::Split::kTrain, degrade::Split::kValid, degrade::Split::kTest}) {
    counts[degrade::split_name(s)] = m.split(s).size();
  }
  return {{"manifest", (fs::path(a.out) / "manifest.jsonl").string()},
          {"utterances", m.entries.size()},
          {"splits", counts},
          {"seed", cfg.train.seed}};
}

struct ToyArgs {
  Common common;
  std::string out;
  degrade::ToySourceOptions options;
};

Json cmd_toy(ToyArgs a, std::ostream& err) {
  const RunConfig cfg = a.common.resolve();
  a.options.seed = cfg.train.seed;
  err << "writing toy sources into " << a.out << "\n";
  degrade::make_toy_sources(a.out, a.options);
  echo_config(a.out, cfg);
  return {{"out", a.out},
          {"clean", a.options.num_clean},
          {"noise", a.options.num_noise},
          {"rir", a.options.num_rir},
          {"seed", a.options.seed}};
}

struct ExtractArgs {
  Common common;
  std::string manifest, out;
  std::string split = "all";
};

Json cmd_extract(const ExtractArgs& a, std::ostream& err) {
  const RunConfig cfg = a.common.resolve();
  require_file("--manifest", a.manifest);
  const degrade::Manifest m = degrade::read_manifest(a.manifest);
  degrade::validate_manifest(m);
  const auto entries = select(m, parse_split_flag(a.split));
  fs::create_directories(a.out);
  std::vector<int> frames(entries.size());
  parallel_for(entries.size(), a.common.jobs, [&](std::size_t i) {
    const auto e = model::load_example(m, entries[i], cfg.fft_size, cfg.fine_fft_size);
    const fs::path base = fs::path(a.out) / e.id;
    nn::write_tensor_file(base.string() + ".dnrw", model::example_tensors(e));
    write_las_pgm(base.string() + "_degraded.pgm", e.l_nr);
    write_las_pgm(base.string() + "_clean.pgm", e.l_c);
    frames[i] = e.num_frames();
  });
  echo_config(a.out, cfg);
  err << "extracted " << entries.size() << " utterances\n";
  int total = 0;
  for (int f : frames) total += f;
  return {{"out", a.out}, {"utterances", entries.size()}, {"frames", total}};
}

struct TrainArgs {
  Common common;
  std::string manifest, checkpoint_dir;
};

Json cmd_train(const TrainArgs& a, std::ostream& err) {
  const RunConfig cfg = a.common.resolve();
  const std::string manifest = a.manifest.empty() ? cfg.manifest : a.manifest;
  const std::string ckpt = a.checkpoint_dir.empty() ? cfg.checkpoint_dir : a.checkpoint_dir;
  if (manifest.empty()) throw ConfigError("train needs --manifest or a manifest config key");
  if (ckpt.empty()) {
    throw ConfigError("train needs --checkpoint-dir or a checkpoint_dir config key");
  }
  require_file("--manifest", manifest);
  const degrade::Manifest m = degrade::read_manifest(manifest);
  degrade::validate_manifest(m);
  auto entries = select(m, cfg.split());
  if (cfg.max_utterances > 0 && entries.size() > static_cast<std::size_t>(cfg.max_utterances)) {
    entries.resize(cfg.max_utterances);
  }

  std::vector<model::Example> examples(entries.size());
  parallel_for(entries.size(), a.common.jobs, [&](std::size_t i) {
    examples[i] = model::load_example(m, entries[i], cfg.fft_size, cfg.fine_fft_size);
  });
  std::vector<const model::Example*> pointers;
  for (const auto& e : examples) pointers.push_back(&e);
  err << "training on " << examples.size() << " utterances\n";

  const model::ModelConfig mc = cfg.model();
  const model::NormStats stats = model::compute_norm_stats(examples);
  const std::uint64_t seed = cfg.train.seed;
  model::DnrAspModel net(mc, derive_seed(seed, 1));
  net.set_norm_stats(stats);
  model::CriticBundle critics(mc, mc.bins(), derive_seed(seed, 2));
  model::Trainer trainer(net, critics, cfg.train, pointers);
  trainer.run([&](const model::LossRow& row) {
    err << row.phase << " " << row.step;
    for (const auto& [k, v] : row.values) err << " " << k << "=" << v;
    err << "\n";
  });
  std::vector<model::LossRow> rows = trainer.log();

  fs::create_directories(ckpt);
  echo_config(ckpt, cfg);
  net.params().save(fs::path(ckpt) / model::kModelWeights);
  critics.params().save(fs::path(ckpt) / model::kCriticWeights);
  const bool band_models = cfg.train.bwe_steps > 0 || cfg.train.fre_steps > 0;
  if (band_models) {
    model::BweFreModels bf(mc, derive_seed(seed, 3));
    bf.set_norm_stats(stats);
    model::round_params_to_float32(bf.params());
    if (cfg.train.bwe_steps > 0) model::train_bwe(bf, cfg.train, pointers, rows);
    if (cfg.train.fre_steps > 0) model::train_fre(bf, cfg.train, pointers, rows);
    bf.params().save(fs::path(ckpt) / model::kBweFreWeights);
  }
  const fs::path csv = fs::path(ckpt) / "loss.csv";
  model::write_loss_csv(csv, rows);

  Json summary = {{"checkpoint_dir", ckpt},
                  {"loss_csv", csv.string()},
                  {"utterances", examples.size()},
                  {"parameters", net.params().parameter_count()},
                  {"bwe_fre", band_models},
                  {"seed", seed}};
  std::optional<double> first, last;
  for (const auto& r : rows) {
    if (r.phase != "step1") continue;
    const auto it = r.values.find("l_c");
    if (it == r.values.end()) continue;
    if (!first) first = it->second;
    last = it->second;
  }
  if (first) {
    summary["step1_l_c_initial"] = *first;
    summary["step1_l_c_final"] = *last;
  }
  return summary;
}

struct EnhanceArgs {
  Common common;
  std::string weights, manifest, wav, out;
  std::string phase = "noisy";
  std::string split = "test";
  bool with_bwe_fre = false;
  bool images = false;
};

Json cmd_enhance(const EnhanceArgs& a, std::ostream& err) {
  if (a.manifest.empty() == a.wav.empty()) {
    throw ConfigError("enhance needs exactly one of --manifest or --wav");
  }
  const fs::path weights(a.weights);
  if (!fs::exists(weights)) throw IoError("--weights: no such path " + weights.string());
  const bool is_dir = fs::is_directory(weights);
  const fs::path dir = is_dir ? weights : weights.parent_path();
  const fs::path file = is_dir ? dir / model::kModelWeights : weights;
  require_file("--weights", file);
  const RunConfig cfg = a.common.resolve(dir / kConfigEcho);

  model::EnhanceOptions opts;
  if (a.phase == "noisy") {
    opts.phase = enhance::PhaseSource::kNoisy;
  } else if (a.phase == "griffinlim") {
    opts.phase = enhance::PhaseSource::kGriffinLim;
  } else {
    throw ConfigError("--phase must be noisy or griffinlim, got '" + a.phase + "'");
  }
  opts.griffin_lim.iters = cfg.griffin_lim_iters;
  opts.griffin_lim.seed = derive_seed(cfg.train.seed, 4);

  const fs::path bf_file = dir / model::kBweFreWeights;
  if (a.with_bwe_fre && !fs::exists(bf_file)) {
    throw ConfigError("--with-bwe-fre: " + dir.string() + " holds " +
                      std::to_string(cfg.fft_size) + "-point weights only (no " +
                      model::kBweFreWeights + ")");
  }
  const model::ModelConfig mc = cfg.model();
  model::DnrAspModel net(mc, 0);
  net.params().load(file);
  std::optional<model::BweFreModels> bf;
  if (a.with_bwe_fre) {
    bf.emplace(mc, 0);
    bf->params().load(bf_file);
  }

  struct Job {
    std::string id;
    fs::path input;
  };
  std::vector<Job> jobs;
  if (!a.manifest.empty()) {
    require_file("--manifest", a.manifest);
    const degrade::Manifest m = degrade::read_manifest(a.manifest);
    for (const auto& e : select(m, parse_split_flag(a.split))) {
      jobs.push_back({e.id, m.resolve(e.degraded_path)});
    }
    std::vector<std::string> missing;
    for (const auto& j : jobs) {
      if (!fs::exists(j.input)) missing.push_back(j.input.string());
    }
    if (!missing.empty()) {
      std::string msg = std::to_string(missing.size()) + " missing input file(s):";
      for (const auto& p : missing) msg += " " + p;
      throw IoError(msg);
    }
  } else {
    require_file("--wav", a.wav);
    jobs.push_back({fs::path(a.wav).stem().string(), a.wav});
  }

  fs::create_directories(a.out);
  int bins = 0;
  parallel_for(jobs.size(), a.common.jobs, [&](std::size_t i) {
    const auto degraded = signal::read_wav(jobs[i].input, cfg.sample_rate);
    const auto result = model::enhance(net, bf ? &*bf : nullptr, degraded, opts);
    const fs::path base = fs::path(a.out) / jobs[i].id;
    signal::write_wav(base.string() + ".wav", result.audio);
    if (a.images) write_las_pgm(base.string() + ".pgm", result.las);
    if (i == 0) bins = result.las.num_bins();
  });
  echo_config(a.out, cfg);
  err << "enhanced " << jobs.size() << " file(s) into " << a.out << "\n";
  return {{"out", a.out}, {"utterances", jobs.size()}, {"bins", bins},
          {"phase", a.phase}, {"bwe_fre", a.with_bwe_fre}};
}

struct EvaluateArgs {
  Common common;
  std::string manifest, enhanced_dir, report_out;
  std::string split = "test";
  bool degraded = false;
};

Json cmd_evaluate(const EvaluateArgs& a, std::ostream& err) {
  if (a.enhanced_dir.empty() == !a.degraded) {
    throw ConfigError("evaluate needs exactly one of --enhanced-dir or --degraded");
  }
  const RunConfig cfg = a.common.resolve();
  require_file("--manifest", a.manifest);
  const degrade::Manifest m = degrade::read_manifest(a.manifest);
  metrics::EvaluateOptions o;
  o.split = parse_split_flag(a.split);
  o.jobs = a.common.jobs;
  const metrics::MetricReport r = a.degraded ? metrics::evaluate_degraded(m, o)
                                             : metrics::evaluate_manifest(m, a.enhanced_dir, o);
  fs::create_directories(a.report_out);
  metrics::write_report(fs::path(a.report_out) / "report", r);
  echo_config(a.report_out, cfg);
  err << "scored " << r.overall.count << " utterances\n";
  return {{"report", (fs::path(a.report_out) / "report.json").string()},
          {"overall", means_json(r.overall)},
          {"groups", r.groups.size()}};
}

struct SelfcheckArgs {
  std::optional<std::uint64_t> seed;
  int gradient_seeds = 10;
};

Json cmd_selfcheck(const SelfcheckArgs& a, std::ostream& err, bool& passed) {
  RunConfig cfg;
  apply_environment(cfg);
  const std::uint64_t seed = a.seed ? *a.seed : cfg.train.seed;
  Json checks = Json::array();
  passed = true;
  for (const auto& c : selfcheck(seed, a.gradient_seeds)) {
    err << (c.passed() ? "PASS " : "FAIL ") << c.name << " " << c.value << " < " << c.tolerance
        << "\n";
    passed = passed && c.passed();
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance},
                      {"passed", c.passed()}});
  }
  return {{"seed", seed}, {"passed", passed}, {"checks", checks}};
}

void print_summary(std::ostream& out, const std::string& command, Json body,
                   const std::string& status = "ok") {
  Json j = {{"command", command}, {"status", status}};
  for (auto& [k, v] : body.items()) j[k] = v;
  out << j.dump() << std::endl;
}

int print_error(std::ostream& out, std::ostream& err, const std::string& command,
                ErrorCategory category, const std::string& message) {
  err << "error (" << category_name(category) << "): " << message << "\n";
  const Json j = {{"command", command},
                  {"status", "error"},
                  {"category", std::string(category_name(category))},
                  {"message", message}};
  out << j.dump() << std::endl;
  return exit_code(category);
}

}  // namespace

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig: return kExitConfig;
    case ErrorCategory::kIo: return kExitIo;
    case ErrorCategory::kShape: return kExitShape;
    case ErrorCategory::kNumeric: return kExitNumeric;
  }
  return kExitInternal;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Denoising and dereverberation with a factorized amplitude spectrum predictor",
               "dnr");
  app.require_subcommand(1);

  std::string command = args.empty() ? "" : args.front();
  std::function<Json()> action;
  bool selfcheck_passed = true;

  SynthesizeArgs syn;
  auto* c = app.add_subcommand("synthesize-corpus", "mix clean speech, noise and RIRs");
  c->add_option("--clean-dir", syn.clean_dir)->required();
  c->add_option("--noise-dir", syn.noise_dir)->required();
  c->add_option("--rir-dir", syn.rir_dir)->required();
  c->add_option("--snr-list", syn.snr_list, "comma-separated dB values")->capture_default_str();
  c->add_option("--splits", syn.splits, "train/valid/test weights")->capture_default_str();
  c->add_option("--out", syn.out)->required();
  add_common(c, syn.common);
  c->callback([&] { action = [&] { return cmd_synthesize(syn, err); }; });

  ToyArgs toy;
  c = app.add_subcommand("make-toy-sources", "write synthetic clean, noise and RIR sources");
  c->add_option("--out", toy.out)->required();
  c->add_option("--num-clean", toy.options.num_clean)->capture_default_str();
  c->add_option("--num-noise", toy.options.num_noise)->capture_default_str();
  c->add_option("--num-rir", toy.options.num_rir)->capture_default_str();
  c->add_option("--seconds", toy.options.seconds)->capture_default_str();
  add_common(c, toy.common);
  c->callback([&] { action = [&] { return cmd_toy(toy, err); }; });

  ExtractArgs ext;
  c = app.add_subcommand("extract-features", "write per-utterance features and LAS images");
  c->add_option("--manifest", ext.manifest)->required();
  c->add_option("--out", ext.out)->required();
  c->add_option("--split", ext.split, "train, valid, test or all")->capture_default_str();
  add_common(c, ext.common, false);
  c->callback([&] { action = [&] { return cmd_extract(ext, err); }; });

  TrainArgs tr;
  c = app.add_subcommand("train", "run training steps 1-3 and optional BWE/FRE");
  c->add_option("--manifest", tr.manifest);
  c->add_option("--checkpoint-dir", tr.checkpoint_dir);
  add_common(c, tr.common);
  c->callback([&] { action = [&] { return cmd_train(tr, err); }; });

  EnhanceArgs en;
  c = app.add_subcommand("enhance", "denoise and dereverberate waveforms");
  c->add_option("--weights", en.weights, "checkpoint directory or weight file")->required();
  auto* man = c->add_option("--manifest", en.manifest);
  auto* wav = c->add_option("--wav", en.wav);
  man->excludes(wav);
  c->add_option("--phase", en.phase, "noisy or griffinlim")->capture_default_str();
  c->add_option("--split", en.split, "manifest split: train, valid, test or all")
      ->capture_default_str();
  c->add_flag("--with-bwe-fre", en.with_bwe_fre, "extend to 4097 bins");
  c->add_flag("--images", en.images, "also write LAS greymaps");
  c->add_option("--out", en.out)->required();
  add_common(c, en.common, false);
  c->callback([&] { action = [&] { return cmd_enhance(en, err); }; });

  EvaluateArgs ev;
  c = app.add_subcommand("evaluate", "score processed audio against clean references");
  c->add_option("--manifest", ev.manifest)->required();
  auto* enh = c->add_option("--enhanced-dir", ev.enhanced_dir, "holds <id>.wav files");
  auto* deg = c->add_flag("--degraded", ev.degraded, "score the degraded inputs instead");
  enh->excludes(deg);
  c->add_option("--report-out", ev.report_out, "directory for report.csv and report.json")
      ->required();
  c->add_option("--split", ev.split, "train, valid, test or all")->capture_default_str();
  add_common(c, ev.common, false);
  c->callback([&] { action = [&] { return cmd_evaluate(ev, err); }; });

  SelfcheckArgs sc;
  c = app.add_subcommand("selfcheck", "gradient, reconstruction and loss identity checks");
  c->add_option("--seed", sc.seed);
  c->add_option("--gradient-seeds", sc.gradient_seeds)->capture_default_str()->check(
      CLI::PositiveNumber);
  c->callback([&] { action = [&] { return cmd_selfcheck(sc, err, selfcheck_passed); }; });

  std::string print_path;
  c = app.add_subcommand("print-config", "print the documented defaults or a parsed config");
  c->add_option("--config", print_path);
  c->callback([&] {
    action = [&] {
      if (print_path.empty()) {
        out << config_reference();
        return Json{{"keys", config_keys().size()}};
      }
      RunConfig cfg = load_run_config(print_path);
      apply_environment(cfg);
      out << format_run_config(cfg);
      return Json{{"config", print_path}};
    };
  });

  std::vector<const char*> argv = {"dnr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return print_error(out, err, command, ErrorCategory::kConfig, e.what());
  }
  for (auto* sub : app.get_subcommands()) command = sub->get_name();

  try {
    Json summary = action();
    print_summary(out, command, std::move(summary), selfcheck_passed ? "ok" : "failed");
    if (!selfcheck_passed) {
      err << "selfcheck failed\n";
      return kExitNumeric;
    }
    return kExitOk;
  } catch (const Error& e) {
    return print_error(out, err, command, e.category(), e.what());
  } catch (const fs::filesystem_error& e) {
    return print_error(out, err, command, ErrorCategory::kIo, e.what());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    out << Json{{"command", command}, {"status", "error"}, {"category", "internal"},
                {"message", e.what()}}.dump()
        << std::endl;
    return kExitInternal;
  }
}

}  // namespace dnr::cli
