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

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "zsntta/decision_log.hpp"
#include "zsntta/error.hpp"
#include "zsntta/feature_file.hpp"
#include "zsntta/metrics.hpp"
#include "zsntta/pipeline.hpp"
#include "zsntta/synthetic.hpp"
#include "zsntta/threshold.hpp"

namespace zsntta {

/// Name of the environment variable holding the default output directory.
inline constexpr const char* kOutputDirEnv = "ZSNTTA_OUT_DIR";

/// Exported features on disk. `noise_banks` maps a noise type to its bank
/// file.
struct FileSource {
  std::filesystem::path id_features;
  std::filesystem::path ood_features;
  std::map<NoiseType, std::filesystem::path> noise_banks;
};

/// Noise type axis value meaning "injection off".
inline constexpr const char* kNoInjection = "none";

struct ExperimentSpec {
  std::variant<SyntheticSpec, FileSource> source = SyntheticSpec{};

  // Scalar settings shared by every cell.
  double tau = 0.01;
  double lr = 0.0005;

  // Sweep axes; the Cartesian product is executed.
  std::vector<Method> methods{Method::kAdaND};
  std::vector<double> noise_ratios{0.5};
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::size_t> inject_every{8};
  std::vector<std::size_t> train_queue_lens{128};
  std::vector<std::size_t> score_queue_lens{512};
  std::vector<std::size_t> warmup_steps{10};
  std::vector<std::string> noise_types{kNoInjection};
  std::vector<PseudoSource> pseudo_sources{PseudoSource::kZsClip};
  std::vector<ThresholdPolicy> thresholds{ThresholdPolicy::adaptive()};

  /// Empty means "write nothing".
  std::filesystem::path out_dir;
  bool decision_logs = false;
  std::size_t threads = 1;

  void validate() const {
    auto nonempty = [](bool ok, const char* axis) {
      if (!ok) throw Error(ErrorCode::kBadConfig, std::string("sweep axis '") + axis + "' is empty");
    };
    nonempty(!methods.empty(), "method");
    nonempty(!noise_ratios.empty(), "noise-ratio");
    nonempty(!seeds.empty(), "seed");
    nonempty(!inject_every.empty(), "m");
    nonempty(!train_queue_lens.empty(), "l");
    nonempty(!score_queue_lens.empty(), "nq");
    nonempty(!warmup_steps.empty(), "n-init");
    nonempty(!noise_types.empty(), "noise-type");
    nonempty(!pseudo_sources.empty(), "pseudo-source");
    nonempty(!thresholds.empty(), "threshold");
    for (double r : noise_ratios) {
      if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::kBadConfig, "noise ratio outside [0, 1]");
    }
    for (auto m : inject_every) if (m == 0) throw Error(ErrorCode::kBadConfig, "M must be >= 1");
    for (auto l : train_queue_lens) if (l == 0) throw Error(ErrorCode::kBadConfig, "L must be >= 1");
    for (auto q : score_queue_lens) if (q == 0) throw Error(ErrorCode::kBadConfig, "N_q must be >= 1");
    if (!(tau > 0.0)) throw Error(ErrorCode::kBadConfig, "tau must be > 0");
    if (!(lr > 0.0)) throw Error(ErrorCode::kBadConfig, "lr must be > 0");
    if (threads == 0) throw Error(ErrorCode::kBadConfig, "threads must be >= 1");
    for (const auto& t : noise_types) {
      if (t == kNoInjection) continue;
      const NoiseType type = parse_noise_type(t);
      if (const auto* files = std::get_if<FileSource>(&source)) {
        if (!files->noise_banks.count(type)) {
          throw Error(ErrorCode::kBadConfig, "no noise bank file given for type '" + t + "'");
        }
      } else if (type != NoiseType::kSyntheticGaussianFeature) {
        throw Error(ErrorCode::kBadConfig, "synthetic source only provides synthetic_gaussian_feature noise");
      } else if (std::get<SyntheticSpec>(source).noise_bank_size == 0) {
        throw Error(ErrorCode::kBadConfig, "synthetic noise requested with noise_bank_size=0");
      }
    }
    if (const auto* synthetic = std::get_if<SyntheticSpec>(&source)) validate_synthetic_spec(*synthetic);
    if (const auto* files = std::get_if<FileSource>(&source)) {
      if (files->id_features.empty()) throw Error(ErrorCode::kBadConfig, "ID feature file is required");
      auto must_exist = [](const std::filesystem::path& p) {
        if (!std::filesystem::is_regular_file(p)) throw Error(ErrorCode::kBadConfig, "no such file: " + p.string());
      };
      must_exist(files->id_features);
      if (!files->ood_features.empty()) must_exist(files->ood_features);
      for (const auto& [type, path] : files->noise_banks) must_exist(path);
    }
    if (!out_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (ec || !std::filesystem::is_directory(out_dir)) {
        throw Error(ErrorCode::kBadConfig, "output directory " + out_dir.string() + " is not writable");
      }
    }
  }
};

/// One point of the sweep.
struct CellConfig {
  Method method = Method::kAdaND;
  double noise_ratio = 0.5;
  std::uint64_t seed = 0;
  std::size_t inject_every = 8;
  std::size_t train_queue_len = 128;
  std::size_t score_queue_len = 512;
  std::size_t warmup_steps = 10;
  std::string noise_type = kNoInjection;
  PseudoSource pseudo_source = PseudoSource::kZsClip;
  ThresholdPolicy threshold = ThresholdPolicy::adaptive();
  double lr = 0.0005;
  double tau = 0.01;

  friend bool operator==(const CellConfig&, const CellConfig&) = default;
};

inline constexpr const char* kFingerprintColumns =
    "method\tnoise_ratio\tseed\tm\tl\tnq\tn_init\tnoise_type\tpseudo_source\tthreshold\tlr\ttau";

/// Every hyper-parameter of the cell, tab-separated, in kFingerprintColumns
/// order.
inline std::string fingerprint_row(const CellConfig& c) {
  char ratio[32], lr[32], tau[32];
  std::snprintf(ratio, sizeof ratio, "%g", c.noise_ratio);
  std::snprintf(lr, sizeof lr, "%g", c.lr);
  std::snprintf(tau, sizeof tau, "%g", c.tau);
  std::ostringstream s;
  s << method_name(c.method) << '\t' << ratio << '\t' << c.seed << '\t' << c.inject_every << '\t'
    << c.train_queue_len << '\t' << c.score_queue_len << '\t' << c.warmup_steps << '\t' << c.noise_type << '\t'
    << pseudo_source_name(c.pseudo_source) << '\t' << c.threshold.to_string() << '\t' << lr << '\t' << tau;
  return s.str();
}

inline std::vector<CellConfig> expand_cells(const ExperimentSpec& spec) {
  std::vector<CellConfig> cells;
  for (auto method : spec.methods)
    for (double ratio : spec.noise_ratios)
      for (auto seed : spec.seeds)
        for (auto m : spec.inject_every)
          for (auto l : spec.train_queue_lens)
            for (auto nq : spec.score_queue_lens)
              for (auto n : spec.warmup_steps)
                for (const auto& noise : spec.noise_types)
                  for (auto pseudo : spec.pseudo_sources)
                    for (const auto& threshold : spec.thresholds) {
                      cells.push_back({method, ratio, seed, m, l, nq, n, noise, pseudo, threshold, spec.lr, spec.tau});
                    }
  return cells;
}

struct CellResult {
  std::size_t index = 0;
  CellConfig config;
  bool ok = false;
  std::string error;
  MetricsReport report;
  std::size_t completed_steps = 0;
  std::size_t injections = 0;
  /// Original-stream decisions; kept only when decision logs are requested.
  std::vector<SampleDecision> decisions;
};

struct ExperimentResult {
  std::vector<CellResult> cells;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok; }));
  }
};

namespace detail {

struct LoadedData {
  std::shared_ptr<const ClassifierBank> bank;
  std::vector<StreamRecord> id_records;
  std::vector<StreamRecord> ood_records;
  std::map<std::string, std::shared_ptr<const NoiseBank>> noise_banks;
};

/// Loads (or synthesizes) what a cell with `seed` needs. File sources are
/// seed-independent; synthetic datasets are regenerated from
/// spec.seed + seed.
class DataCache {
 public:
  explicit DataCache(const ExperimentSpec& spec) : spec_(spec) {}

  std::shared_ptr<const LoadedData> get(std::uint64_t seed) {
    const bool synthetic = std::holds_alternative<SyntheticSpec>(spec_.source);
    const std::uint64_t key = synthetic ? seed : 0;
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto data = std::make_shared<LoadedData>(synthetic ? load_synthetic(seed) : load_files());
    cache_.emplace(key, data);
    return data;
  }

 private:
  LoadedData load_synthetic(std::uint64_t seed) const {
    SyntheticSpec s = std::get<SyntheticSpec>(spec_.source);
    s.seed += seed;
    SyntheticStream st = synth_stream(s);
    LoadedData d{std::make_shared<const ClassifierBank>(std::move(st.bank)), std::move(st.id_records),
                 std::move(st.ood_records), {}};
    if (!st.noise_bank.features.empty()) {
      d.noise_banks[std::string(noise_type_name(NoiseType::kSyntheticGaussianFeature))] =
          std::make_shared<const NoiseBank>(std::move(st.noise_bank));
    }
    return d;
  }

  LoadedData load_files() const {
    const auto& files = std::get<FileSource>(spec_.source);
    FeatureFile id = read_feature_file(files.id_features);
    LoadedData d{std::make_shared<const ClassifierBank>(std::move(id.bank)), std::move(id.records), {}, {}};
    if (!files.ood_features.empty()) {
      FeatureFileContents ood = decode_feature_file(detail::read_bytes(files.ood_features));
      if (ood.dim != d.bank->dim()) throw Error(ErrorCode::kDimMismatch, "OOD feature file dim differs");
      for (auto& r : ood.records) {
        // Anything in the OOD file is noisy regardless of its stored label.
        r.truth = Label::noisy();
        d.ood_records.push_back(std::move(r));
      }
    }
    // Records labelled noisy inside the ID file also count as OOD.
    std::vector<StreamRecord> clean;
    for (auto& r : d.id_records) (r.truth.is_noisy() ? d.ood_records : clean).push_back(std::move(r));
    d.id_records = std::move(clean);
    for (const auto& [type, path] : files.noise_banks) {
      d.noise_banks[std::string(noise_type_name(type))] = std::make_shared<const NoiseBank>(read_noise_bank(path, type));
    }
    return d;
  }

  const ExperimentSpec& spec_;
  std::mutex mu_;
  std::map<std::uint64_t, std::shared_ptr<const LoadedData>> cache_;
};

inline CellResult run_cell(std::size_t index, const CellConfig& cell, DataCache& cache, bool keep_decisions) {
  CellResult out;
  out.index = index;
  out.config = cell;
  try {
    auto data = cache.get(cell.seed);
    PipelineConfig pc;
    pc.tau = cell.tau;
    pc.lr = cell.lr;
    pc.inject_every = cell.inject_every;
    pc.train_queue_len = cell.train_queue_len;
    pc.score_queue_len = cell.score_queue_len;
    pc.warmup_steps = cell.warmup_steps;
    pc.method = cell.method;
    pc.pseudo_source = cell.pseudo_source;
    pc.threshold = cell.threshold;
    pc.seed = cell.seed;
    if (cell.noise_type != kNoInjection) {
      auto it = data->noise_banks.find(cell.noise_type);
      if (it == data->noise_banks.end()) throw Error(ErrorCode::kEmptyBank, "no bank for " + cell.noise_type);
      pc.noise_bank = it->second;
    }
    const auto stream = mix_streams(data->id_records, data->ood_records, cell.noise_ratio, cell.seed);
    StreamResult r = run_stream(*data->bank, stream, pc);
    out.report = r.report;
    out.completed_steps = r.completed_steps;
    out.injections = r.injections;
    if (keep_decisions) out.decisions = original_decisions(r.decisions);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

inline std::string cell_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell_%04zu", index);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
}

}  // namespace detail

/// Structured-text report for one cell: configuration fingerprint followed
/// by the metrics.
inline std::string cell_report_text(const CellResult& c) {
  std::string out;
  std::istringstream names(kFingerprintColumns), values(fingerprint_row(c.config));
  for (std::string n, v; std::getline(names, n, '\t') && std::getline(values, v, '\t');) out += n + "=" + v + "\n";
  out += "cell_status=" + std::string(c.ok ? "ok" : "failed") + "\n";
  if (!c.ok) {
    out += "error=" + c.error + "\n";
    return out;
  }
  out += "completed_steps=" + std::to_string(c.completed_steps) + "\n";
  out += "injections=" + std::to_string(c.injections) + "\n";
  out += report_to_key_value(c.report);
  return out;
}

/// Aggregate table: one row per cell, fingerprint columns then metrics.
inline std::string summary_table(const ExperimentResult& r) {
  std::string out = std::string("cell\t") + kFingerprintColumns + "\tstatus\t" + kReportColumns + "\n";
  for (const auto& c : r.cells) {
    out += std::to_string(c.index) + "\t" + fingerprint_row(c.config) + "\t" + (c.ok ? "ok" : "failed") + "\t";
    out += c.ok ? report_to_row(c.report) : "-\t-\t-\t-\t-\t-\t-";
    out += "\n";
  }
  return out;
}

/// Runs every cell of the sweep (in parallel when spec.threads > 1) and
/// writes per-cell reports, the summary table and optional decision logs.
/// A failing cell is recorded and the run continues.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto cells = expand_cells(spec);
  detail::DataCache cache(spec);
  ExperimentResult result;
  result.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      result.cells[i] = detail::run_cell(i, cells[i], cache, spec.decision_logs);
    }
  };
  const std::size_t n_threads = std::min(spec.threads, std::max<std::size_t>(cells.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (!spec.out_dir.empty()) {
    for (const auto& c : result.cells) {
      const std::string stem = detail::cell_stem(c.index);
      detail::write_text(spec.out_dir / (stem + ".txt"), cell_report_text(c));
      if (spec.decision_logs && c.ok) {
        std::ofstream log(spec.out_dir / (stem + "_decisions.tsv"), std::ios::trunc);
        write_decision_log(log, c.decisions);
        if (!log) throw Error(ErrorCode::kIoFailure, "cannot write decision log for " + stem);
      }
    }
    detail::write_text(spec.out_dir / "summary.tsv", summary_table(result));
  }
  return result;
}

namespace detail {

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::kBadConfig, "bad number '" + s + "' for " + what);
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::kBadConfig, "bad integer '" + s + "' for " + what);
  }
  return std::stoull(s);
}

}  // namespace detail

/// Parses "key=value,key=value" into a SyntheticSpec; omitted keys keep
/// their defaults. Keys: k, d, n_per_class, n_ood, ood_clusters,
/// concentration, ood_concentration, ood_mix, common_weight,
/// noise_bank_size, noise_concentration, seed.
inline SyntheticSpec parse_synthetic_spec(const std::string& text, SyntheticSpec spec = {}) {
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kBadConfig, "expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "k") spec.num_classes = detail::parse_uint(value, key);
    else if (key == "d") spec.dim = detail::parse_uint(value, key);
    else if (key == "n_per_class") spec.n_per_class = detail::parse_uint(value, key);
    else if (key == "n_ood") spec.n_ood = detail::parse_uint(value, key);
    else if (key == "ood_clusters") spec.ood_clusters = detail::parse_uint(value, key);
    else if (key == "concentration") spec.concentration = detail::parse_double(value, key);
    else if (key == "ood_concentration") spec.ood_concentration = detail::parse_double(value, key);
    else if (key == "ood_mix") spec.ood_mix = detail::parse_double(value, key);
    else if (key == "common_weight") spec.common_weight = detail::parse_double(value, key);
    else if (key == "noise_bank_size") spec.noise_bank_size = detail::parse_uint(value, key);
    else if (key == "noise_concentration") spec.noise_concentration = detail::parse_double(value, key);
    else if (key == "seed") spec.seed = detail::parse_uint(value, key);
    else throw Error(ErrorCode::kBadConfig, "unknown synthetic key '" + key + "'");
  }
  return spec;
}

}  // namespace zsntta
