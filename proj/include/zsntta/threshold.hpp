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
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "zsntta/error.hpp"

namespace zsntta {

/// Sliding FIFO window of the most recent scores. A sorted mirror of the
/// contents is kept alongside so the threshold search is a single linear
/// scan per query.
class ScoreQueue {
 public:
  explicit ScoreQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error(ErrorCode::kBadSpec, "score queue capacity must be >= 1");
  }

  void push(double score) {
    if (!std::isfinite(score)) throw Error(ErrorCode::kNonFinite, "score is not finite");
    if (fifo_.size() == capacity_) {
      const double oldest = fifo_.front();
      fifo_.pop_front();
      sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), oldest));
    }
    fifo_.push_back(score);
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), score), score);
  }

  std::size_t size() const noexcept { return fifo_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return fifo_.empty(); }

  /// Contents in insertion order.
  std::vector<double> contents() const { return {fifo_.begin(), fifo_.end()}; }
  std::span<const double> sorted() const noexcept { return sorted_; }

 private:
  std::size_t capacity_;
  std::deque<double> fifo_;
  std::vector<double> sorted_;
};

inline void push_score(ScoreQueue& q, double score) { q.push(score); }

struct ThresholdSplit {
  double lambda = 0.5;
  /// Sum of the two partition variances at `lambda`; NaN on fallback.
  double objective = 0.0;
  bool fallback = false;
};

inline constexpr double kFallbackThreshold = 0.5;

/// Within-class-variance threshold over already sorted scores. Candidates
/// are midpoints between consecutive distinct values, so both partitions
/// are non-empty; the lowest objective wins and ties go to the smaller
/// midpoint. Fewer than two distinct scores yields the 0.5 fallback.
inline ThresholdSplit min_variance_split(std::span<const double> sorted) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptyQueue, "no scores to threshold");
  const std::size_t n = sorted.size();
  if (sorted.front() == sorted.back()) return {kFallbackThreshold, std::nan(""), true};

  // Centering first keeps the sum-of-squares subtraction well conditioned.
  double mean = 0.0;
  for (double s : sorted) mean += s;
  mean /= static_cast<double>(n);
  double total = 0.0, total_sq = 0.0;
  for (double s : sorted) {
    const double c = s - mean;
    total += c;
    total_sq += c * c;
  }

  ThresholdSplit best{kFallbackThreshold, std::numeric_limits<double>::infinity(), false};
  double low = 0.0, low_sq = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double c = sorted[i] - mean;
    low += c;
    low_sq += c * c;
    if (!(sorted[i] < sorted[i + 1])) continue;
    const double n_low = static_cast<double>(i + 1);
    const double n_high = static_cast<double>(n - i - 1);
    const double high = total - low;
    const double high_sq = total_sq - low_sq;
    const double var_low = std::max(0.0, low_sq / n_low - (low / n_low) * (low / n_low));
    const double var_high = std::max(0.0, high_sq / n_high - (high / n_high) * (high / n_high));
    const double j = var_low + var_high;
    if (j < best.objective) {
      best.objective = j;
      best.lambda = 0.5 * (sorted[i] + sorted[i + 1]);
    }
  }
  return best;
}

inline double adaptive_threshold(const ScoreQueue& q) {
  if (q.empty()) throw Error(ErrorCode::kEmptyQueue, "adaptive threshold on an empty queue");
  return min_variance_split(q.sorted()).lambda;
}

/// Convenience overload for unsorted scores.
inline double adaptive_threshold(std::span<const double> scores) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  return min_variance_split(sorted).lambda;
}

class ThresholdPolicy {
 public:
  enum class Kind { kAdaptive, kFixed };

  static ThresholdPolicy adaptive() { return ThresholdPolicy(Kind::kAdaptive, 0.0); }
  static ThresholdPolicy fixed(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw Error(ErrorCode::kBadSpec, "fixed threshold must lie in [0, 1]");
    }
    return ThresholdPolicy(Kind::kFixed, lambda);
  }

  Kind kind() const noexcept { return kind_; }
  bool is_adaptive() const noexcept { return kind_ == Kind::kAdaptive; }
  double fixed_value() const noexcept { return value_; }

  /// "adaptive" or "fixed:<lambda>".
  std::string to_string() const {
    if (is_adaptive()) return "adaptive";
    char buf[32];
    std::snprintf(buf, sizeof buf, "fixed:%g", value_);
    return buf;
  }

  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;

 private:
  ThresholdPolicy(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_;
  double value_;
};

inline ThresholdPolicy parse_threshold_policy(const std::string& s) {
  if (s == "adaptive") return ThresholdPolicy::adaptive();
  if (s.rfind("fixed:", 0) == 0) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s.substr(6), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() - 6) throw Error(ErrorCode::kBadConfig, "bad threshold '" + s + "'");
    return ThresholdPolicy::fixed(v);
  }
  throw Error(ErrorCode::kBadConfig, "threshold must be 'adaptive' or 'fixed:<lambda>', got '" + s + "'");
}

inline double effective_threshold(const ThresholdPolicy& policy, const ScoreQueue& q) {
  if (!policy.is_adaptive()) return policy.fixed_value();
  return adaptive_threshold(q);
}

}  // namespace zsntta
