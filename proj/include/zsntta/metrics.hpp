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
#include <cstddef>
#include <cstdio>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsntta/error.hpp"
#include "zsntta/feature.hpp"

namespace zsntta {

/// One detection score paired with whether the sample is truly clean.
struct ScoredSample {
  double score = 0.0;
  bool is_clean = false;
};

namespace detail {

inline void count_classes(std::span<const ScoredSample> pairs, std::size_t& clean, std::size_t& noisy) {
  clean = 0;
  noisy = 0;
  for (const auto& p : pairs) (p.is_clean ? clean : noisy)++;
  if (clean == 0 || noisy == 0) {
    throw Error(ErrorCode::kOneClassOnly, "ranking metrics need both clean and noisy samples");
  }
}

}  // namespace detail

/// Probability that a random clean score exceeds a random noisy one, ties
/// counting one half. Computed from mid-ranks (Mann-Whitney U).
inline double auroc(std::span<const ScoredSample> pairs) {
  std::size_t n_clean = 0, n_noisy = 0;
  detail::count_classes(pairs, n_clean, n_noisy);
  std::vector<ScoredSample> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });
  // Twice the clean rank sum keeps mid-ranks integral.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t clean_in_run = 0;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      clean_in_run += sorted[j].is_clean ? 1 : 0;
      ++j;
    }
    // ranks i+1 .. j, mid-rank (i + 1 + j) / 2
    twice_rank_sum += static_cast<double>(clean_in_run) * static_cast<double>(i + 1 + j);
    i = j;
  }
  const double nc = static_cast<double>(n_clean);
  const double twice_u = twice_rank_sum - nc * (nc + 1.0);
  return twice_u / (2.0 * nc * static_cast<double>(n_noisy));
}

/// Smallest false-positive rate among thresholds t (clean iff score >= t)
/// whose true-positive rate on clean samples is at least 95%.
inline double fpr_at_95_tpr(std::span<const ScoredSample> pairs) {
  std::size_t n_clean = 0, n_noisy = 0;
  detail::count_classes(pairs, n_clean, n_noisy);
  std::vector<double> clean;
  clean.reserve(n_clean);
  for (const auto& p : pairs) {
    if (p.is_clean) clean.push_back(p.score);
  }
  std::sort(clean.begin(), clean.end(), std::greater<>());
  // Smallest k with k / n_clean >= 0.95, in integers.
  const std::size_t k = (95 * n_clean + 99) / 100;
  const double t = clean[k - 1];
  std::size_t false_pos = 0;
  for (const auto& p : pairs) {
    if (!p.is_clean && p.score >= t) ++false_pos;
  }
  return static_cast<double>(false_pos) / static_cast<double>(n_noisy);
}

struct MetricsReport {
  std::optional<double> acc_s;
  std::optional<double> acc_n;
  std::optional<double> acc_h;
  std::optional<double> auroc;
  std::optional<double> fpr95;
  std::size_t n_id = 0;
  std::size_t n_noisy = 0;

  bool no_samples() const noexcept { return n_id + n_noisy == 0; }
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Harmonic mean of two percentages; 0 when both are 0.
inline double harmonic_accuracy(double acc_s, double acc_n) {
  const double sum = acc_s + acc_n;
  return sum == 0.0 ? 0.0 : 2.0 * acc_s * acc_n / sum;
}

class MetricsAccumulator {
 public:
  /// Counts one original-stream verdict. An ID sample is correct only when
  /// the prediction is its exact class; a noisy sample is detected only when
  /// the prediction is noisy.
  void add(Label prediction, Label truth, double score, Origin origin = Origin::original()) {
    if (origin.is_injected()) {
      throw Error(ErrorCode::kInjectedRecord, "injected samples never enter metrics");
    }
    if (truth.is_noisy()) {
      ++noisy_total_;
      if (prediction.is_noisy()) ++noisy_detected_;
    } else {
      ++id_total_;
      if (prediction == truth) ++id_correct_;
    }
    scores_.push_back({score, !truth.is_noisy()});
  }

  void merge(const MetricsAccumulator& other) {
    id_total_ += other.id_total_;
    id_correct_ += other.id_correct_;
    noisy_total_ += other.noisy_total_;
    noisy_detected_ += other.noisy_detected_;
    scores_.insert(scores_.end(), other.scores_.begin(), other.scores_.end());
  }

  std::size_t id_total() const noexcept { return id_total_; }
  std::size_t id_correct() const noexcept { return id_correct_; }
  std::size_t noisy_total() const noexcept { return noisy_total_; }
  std::size_t noisy_detected() const noexcept { return noisy_detected_; }
  std::span<const ScoredSample> scores() const noexcept { return scores_; }

  MetricsReport finalize() const {
    MetricsReport r;
    r.n_id = id_total_;
    r.n_noisy = noisy_total_;
    if (id_total_ > 0) r.acc_s = 100.0 * static_cast<double>(id_correct_) / static_cast<double>(id_total_);
    if (noisy_total_ > 0) {
      r.acc_n = 100.0 * static_cast<double>(noisy_detected_) / static_cast<double>(noisy_total_);
    }
    if (r.acc_s && r.acc_n) r.acc_h = harmonic_accuracy(*r.acc_s, *r.acc_n);
    if (id_total_ > 0 && noisy_total_ > 0) {
      r.auroc = zsntta::auroc(scores_);
      r.fpr95 = fpr_at_95_tpr(scores_);
    }
    return r;
  }

 private:
  std::size_t id_total_ = 0;
  std::size_t id_correct_ = 0;
  std::size_t noisy_total_ = 0;
  std::size_t noisy_detected_ = 0;
  std::vector<ScoredSample> scores_;
};

inline void accumulate(MetricsAccumulator& acc, Label prediction, Label truth, double score,
                       Origin origin = Origin::original()) {
  acc.add(prediction, truth, score, origin);
}

inline MetricsReport finalize(const MetricsAccumulator& acc) { return acc.finalize(); }

namespace detail {

inline std::string format_optional(const std::optional<double>& v, const char* fmt) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

}  // namespace detail

/// "key=value" lines; absent values print as "-".
inline std::string report_to_key_value(const MetricsReport& r) {
  std::string out;
  out += "acc_s=" + detail::format_optional(r.acc_s, "%.4f") + "\n";
  out += "acc_n=" + detail::format_optional(r.acc_n, "%.4f") + "\n";
  out += "acc_h=" + detail::format_optional(r.acc_h, "%.4f") + "\n";
  out += "auroc=" + detail::format_optional(r.auroc, "%.6f") + "\n";
  out += "fpr95=" + detail::format_optional(r.fpr95, "%.6f") + "\n";
  out += "n_id=" + std::to_string(r.n_id) + "\n";
  out += "n_noisy=" + std::to_string(r.n_noisy) + "\n";
  if (r.no_samples()) out += "status=no samples\n";
  return out;
}

inline constexpr const char* kReportColumns = "acc_s\tacc_n\tacc_h\tauroc\tfpr95\tn_id\tn_noisy";

/// Tab-separated row in kReportColumns order.
inline std::string report_to_row(const MetricsReport& r) {
  return detail::format_optional(r.acc_s, "%.4f") + "\t" + detail::format_optional(r.acc_n, "%.4f") + "\t" +
         detail::format_optional(r.acc_h, "%.4f") + "\t" + detail::format_optional(r.auroc, "%.6f") + "\t" +
         detail::format_optional(r.fpr95, "%.6f") + "\t" + std::to_string(r.n_id) + "\t" +
         std::to_string(r.n_noisy);
}

}  // namespace zsntta
