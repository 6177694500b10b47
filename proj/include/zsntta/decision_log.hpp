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

// Tab-separated decision log, one row per original-stream sample:
//   index  truth  prediction  stage  mcm_score  detector_score  lambda
// Labels use -1 for noisy; an absent detector score is written as "-".

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "zsntta/error.hpp"
#include "zsntta/pipeline.hpp"

namespace zsntta {

inline constexpr const char* kDecisionLogHeader =
    "index\ttruth\tprediction\tstage\tmcm_score\tdetector_score\tlambda";

struct DecisionLogRow {
  std::size_t index = 0;
  int truth = 0;
  int prediction = 0;
  int stage = 1;
  double mcm_score = 0.0;
  std::optional<double> detector_score;
  double lambda = 0.0;

  friend bool operator==(const DecisionLogRow&, const DecisionLogRow&) = default;
};

namespace detail {

// %.17g round-trips every double.
inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes the original-stream decisions; injected ones are skipped.
inline void write_decision_log(std::ostream& out, const std::vector<SampleDecision>& decisions) {
  out << kDecisionLogHeader << '\n';
  for (const auto& d : decisions) {
    if (d.origin.is_injected()) continue;
    out << d.index << '\t' << d.truth.raw() << '\t' << d.prediction.raw() << '\t' << d.stage << '\t'
        << detail::exact(d.mcm_score) << '\t' << (d.detector_score ? detail::exact(*d.detector_score) : "-")
        << '\t' << detail::exact(d.lambda) << '\n';
  }
}

inline std::vector<DecisionLogRow> read_decision_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDecisionLogHeader) {
    throw Error(ErrorCode::kBadSpec, "decision log header missing or malformed");
  }
  std::vector<DecisionLogRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    DecisionLogRow r;
    std::string det;
    if (!(fields >> r.index >> r.truth >> r.prediction >> r.stage >> r.mcm_score >> det >> r.lambda)) {
      throw Error(ErrorCode::kBadSpec, "malformed decision log line " + std::to_string(line_no));
    }
    if (det != "-") r.detector_score = std::stod(det);
    rows.push_back(r);
  }
  return rows;
}

enum class HistogramScore { kMcm, kDetector };

/// Per-bin counts over [0, 1], split by ground truth. Rows without the
/// requested score (detector score in a frozen run) fall back to the MCM
/// score. Returns "bin_lo  bin_hi  clean  noisy" rows.
inline std::string emit_score_histogram(const std::vector<DecisionLogRow>& log, std::size_t bins,
                                        HistogramScore which = HistogramScore::kMcm) {
  if (log.empty()) throw Error(ErrorCode::kEmptyLog, "decision log is empty");
  if (bins == 0) throw Error(ErrorCode::kBadSpec, "need at least one bin");
  std::vector<std::size_t> clean(bins, 0), noisy(bins, 0);
  for (const auto& r : log) {
    const double s = which == HistogramScore::kDetector && r.detector_score ? *r.detector_score : r.mcm_score;
    auto b = static_cast<std::size_t>(std::floor(std::clamp(s, 0.0, 1.0) * static_cast<double>(bins)));
    if (b >= bins) b = bins - 1;
    (r.truth == Label::kNoisyValue ? noisy : clean)[b]++;
  }
  std::ostringstream out;
  out << "bin_lo\tbin_hi\tclean\tnoisy\n";
  for (std::size_t b = 0; b < bins; ++b) {
    char lo[32], hi[32];
    std::snprintf(lo, sizeof lo, "%.6g", static_cast<double>(b) / static_cast<double>(bins));
    std::snprintf(hi, sizeof hi, "%.6g", static_cast<double>(b + 1) / static_cast<double>(bins));
    out << lo << '\t' << hi << '\t' << clean[b] << '\t' << noisy[b] << '\n';
  }
  return out.str();
}

}  // namespace zsntta
