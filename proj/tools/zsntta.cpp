/*
 * Copyright 2026 The zsntta Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: `run` sweeps pipeline configurations, `synth`
// writes synthetic feature files, `histogram` bins a decision log.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zsntta/zsntta.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCellFailed = 1;
constexpr int kExitBadSpec = 2;

struct RunFlags {
  std::string id_features;
  std::string ood_features;
  std::vector<std::string> noise_banks;  // type:path
  std::string synthetic;
  std::vector<std::string> methods{"adand"};
  std::vector<std::string> pseudo_sources{"zsclip"};
  std::vector<std::string> thresholds{"adaptive"};
  std::vector<double> noise_ratios{0.5};
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::size_t> m{8};
  std::vector<std::size_t> l{128};
  std::vector<std::size_t> nq{512};
  std::vector<std::size_t> n_init{10};
  std::vector<std::string> noise_types;
  double lr = 0.0005;
  double tau = 0.01;
  std::string out;
  bool decision_logs = false;
  std::size_t threads = 1;
};

template <typename T, typename F>
std::vector<T> map_all(const std::vector<std::string>& in, F parse) {
  std::vector<T> out;
  for (const auto& s : in) out.push_back(parse(s));
  return out;
}

zsntta::ExperimentSpec build_spec(const RunFlags& f) {
  using namespace zsntta;
  ExperimentSpec spec;
  const bool files = !f.id_features.empty();
  if (files == !f.synthetic.empty()) {
    throw Error(ErrorCode::kBadConfig, "give exactly one of --id-features or --synthetic");
  }
  std::vector<std::string> default_noise{kNoInjection};
  if (files) {
    FileSource src{f.id_features, f.ood_features, {}};
    for (const auto& item : f.noise_banks) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw Error(ErrorCode::kBadConfig, "--noise-bank expects type:path");
      src.noise_banks[parse_noise_type(item.substr(0, colon))] = item.substr(colon + 1);
    }
    if (!src.noise_banks.empty()) {
      default_noise.clear();
      for (const auto& [type, path] : src.noise_banks) default_noise.emplace_back(noise_type_name(type));
    }
    spec.source = std::move(src);
  } else {
    SyntheticSpec s = parse_synthetic_spec(f.synthetic);
    if (s.noise_bank_size > 0) default_noise = {std::string(noise_type_name(NoiseType::kSyntheticGaussianFeature))};
    spec.source = s;
  }
  spec.methods = map_all<Method>(f.methods, [](const std::string& s) { return parse_method(s); });
  spec.pseudo_sources = map_all<PseudoSource>(f.pseudo_sources, [](const std::string& s) { return parse_pseudo_source(s); });
  spec.thresholds = map_all<ThresholdPolicy>(f.thresholds, parse_threshold_policy);
  spec.noise_ratios = f.noise_ratios;
  spec.seeds = f.seeds;
  spec.inject_every = f.m;
  spec.train_queue_lens = f.l;
  spec.score_queue_lens = f.nq;
  spec.warmup_steps = f.n_init;
  spec.noise_types = f.noise_types.empty() ? default_noise : f.noise_types;
  spec.lr = f.lr;
  spec.tau = f.tau;
  spec.decision_logs = f.decision_logs;
  spec.threads = f.threads;
  std::string out = f.out;
  if (out.empty()) {
    if (const char* env = std::getenv(kOutputDirEnv)) out = env;
  }
  spec.out_dir = out;
  return spec;
}

int do_run(const RunFlags& flags) {
  zsntta::ExperimentSpec spec;
  try {
    spec = build_spec(flags);
    spec.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid experiment: " << e.what() << "\n";
    return kExitBadSpec;
  }
  zsntta::ExperimentResult result;
  try {
    result = zsntta::run_experiment(spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCellFailed;
  }
  std::cout << zsntta::summary_table(result);
  for (const auto& c : result.cells) {
    if (!c.ok) std::cerr << "cell " << c.index << " failed: " << c.error << "\n";
  }
  return result.failures() == 0 ? kExitOk : kExitCellFailed;
}

struct SynthFlags {
  std::string synthetic;
  std::string out;
};

int do_synth(const SynthFlags& f) {
  using namespace zsntta;
  std::optional<SyntheticStream> st;
  try {
    st = synth_stream(parse_synthetic_spec(f.synthetic));
  } catch (const std::exception& e) {
    std::cerr << "invalid synthetic spec: " << e.what() << "\n";
    return kExitBadSpec;
  }
  try {
    const std::filesystem::path dir = f.out;
    std::filesystem::create_directories(dir);
    write_feature_file(st->bank, st->id_records, dir / "id.znta");
    write_feature_file(st->bank, st->ood_records, dir / "ood.znta");
    if (!st->noise_bank.features.empty()) write_noise_bank(st->noise_bank, dir / "noise.znta");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCellFailed;
  }
  return kExitOk;
}

struct HistogramFlags {
  std::string log;
  std::size_t bins = 10;
  std::string score = "mcm";
};

int do_histogram(const HistogramFlags& f) {
  using namespace zsntta;
  HistogramScore which;
  if (f.score == "mcm") which = HistogramScore::kMcm;
  else if (f.score == "detector") which = HistogramScore::kDetector;
  else {
    std::cerr << "--score must be mcm or detector\n";
    return kExitBadSpec;
  }
  std::ifstream in(f.log);
  if (!in) {
    std::cerr << "cannot open " << f.log << "\n";
    return kExitBadSpec;
  }
  try {
    std::cout << emit_score_histogram(read_decision_log(in), f.bins, which);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCellFailed;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online zero-shot noisy test-time adaptation runner"};
  app.require_subcommand(1);

  app.set_config("--config", "", "TOML/INI file; run flags go under a [run] section and command-line flags win");

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Run a sweep of pipeline configurations");
  run_cmd->fallthrough();
  run_cmd->add_option("--id-features", run.id_features, "ID feature file (carries the classifier bank)");
  run_cmd->add_option("--ood-features", run.ood_features, "OOD feature file; every record counts as noisy");
  run_cmd->add_option("--noise-bank", run.noise_banks, "Noise bank as type:path (repeatable)");
  run_cmd->add_option("--synthetic", run.synthetic, "Synthetic stream, e.g. k=10,d=64,common_weight=3");
  run_cmd->add_option("--method", run.methods, "frozen | adand")->delimiter(',');
  run_cmd->add_option("--pseudo-source", run.pseudo_sources, "zsclip | detector | oracle")->delimiter(',');
  run_cmd->add_option("--threshold", run.thresholds, "adaptive | fixed:<lambda>")->delimiter(',');
  run_cmd->add_option("--noise-ratio", run.noise_ratios, "Fraction of noisy samples in the stream")->delimiter(',');
  run_cmd->add_option("--seed", run.seeds, "Seeds")->delimiter(',');
  run_cmd->add_option("--m", run.m, "Inject one noise sample every M samples")->delimiter(',');
  run_cmd->add_option("--l", run.l, "Training queue length")->delimiter(',');
  run_cmd->add_option("--nq", run.nq, "Score queue length")->delimiter(',');
  run_cmd->add_option("--n-init", run.n_init, "Optimization steps before the detector takes over")->delimiter(',');
  run_cmd->add_option("--noise-type", run.noise_types, "Injected noise type, or none")->delimiter(',');
  run_cmd->add_option("--lr", run.lr, "Adam learning rate");
  run_cmd->add_option("--tau", run.tau, "Softmax temperature");
  run_cmd->add_option("--out", run.out, std::string("Output directory (default $") + zsntta::kOutputDirEnv + ")");
  run_cmd->add_flag("--decision-logs", run.decision_logs, "Write per-cell decision logs");
  run_cmd->add_option("--threads", run.threads, "Cells run in parallel");

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic stream as feature files");
  synth_cmd->add_option("--synthetic", synth.synthetic, "Synthetic stream spec")->required();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  HistogramFlags hist;
  auto* hist_cmd = app.add_subcommand("histogram", "Bin the scores of a decision log by truth");
  hist_cmd->add_option("--log", hist.log, "Decision log TSV")->required();
  hist_cmd->add_option("--bins", hist.bins, "Number of bins over [0, 1]")->check(CLI::PositiveNumber);
  hist_cmd->add_option("--score", hist.score, "mcm | detector");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadSpec;
  }
  if (run_cmd->parsed()) return do_run(run);
  if (synth_cmd->parsed()) return do_synth(synth);
  return do_histogram(hist);
}
