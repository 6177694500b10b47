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
#include <span>
#include <vector>

#include "zsntta/error.hpp"
#include "zsntta/feature.hpp"

namespace zsntta {

/// Softmax temperature, strictly positive.
class Temperature {
 public:
  explicit Temperature(double tau) : tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::kBadSpec, "temperature must be > 0");
  }
  double value() const noexcept { return tau_; }

 private:
  double tau_;
};

using SimilarityVector = std::vector<double>;

/// Cosine of the angle between `f` and every prototype in `bank`.
inline SimilarityVector cosine_similarities(const FeatureVector& f, const ClassifierBank& bank) {
  if (f.dim() != bank.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "feature dim " + std::to_string(f.dim()) + " vs bank dim " + std::to_string(bank.dim()));
  }
  const double fn = f.norm();
  if (fn < 1e-12) throw Error(ErrorCode::kZeroVector, "feature has zero norm");
  const auto x = f.values();
  SimilarityVector sims(bank.num_classes());
  for (std::size_t k = 0; k < sims.size(); ++k) {
    const auto t = bank.prototype(k).values();
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += x[j] * t[j];
    sims[k] = dot / (fn * bank.prototype_norm(k));
  }
  return sims;
}

/// softmax(logits / tau), max-subtracted.
inline std::vector<double> softmax(std::span<const double> logits, double tau = 1.0) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((logits[i] - top) / tau);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

/// Maximum concept-matching score: the largest softmax probability of the
/// temperature-scaled similarities. The winning term is exp(0) = 1 after max
/// subtraction, so the score is 1 / sum_j exp((s_j - s_max) / tau).
inline double mcm_score(std::span<const double> sims, Temperature tau) {
  if (sims.empty()) throw Error(ErrorCode::kBadSpec, "need at least one similarity");
  const double top = *std::max_element(sims.begin(), sims.end());
  double sum = 0.0;
  for (double s : sims) sum += std::exp((s - top) / tau.value());
  return 1.0 / sum;
}

/// Index of the largest similarity; ties go to the lowest index.
inline std::size_t classify(std::span<const double> sims) {
  if (sims.empty()) throw Error(ErrorCode::kBadSpec, "need at least one similarity");
  return static_cast<std::size_t>(std::max_element(sims.begin(), sims.end()) - sims.begin());
}

}  // namespace zsntta
