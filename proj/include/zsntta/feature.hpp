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

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zsntta/error.hpp"

namespace zsntta {

/// A D-dimensional embedding of one test input. Coordinates are held in
/// 64-bit precision; the on-disk format narrows them to f32.
class FeatureVector {
 public:
  FeatureVector() = default;

  /// Wraps `values` as-is after checking that every entry is finite.
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {
    for (double x : values_) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kNonFinite, "feature vector has a non-finite entry");
      }
    }
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double norm() const noexcept {
    double sq = 0.0;
    for (double x : values_) sq += x * x;
    return std::sqrt(sq);
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> values_;
};

/// Scales `raw` to unit L2 norm.
inline FeatureVector normalize(std::span<const double> raw) {
  if (raw.empty()) throw Error(ErrorCode::kZeroVector, "empty vector");
  double sq = 0.0;
  for (double x : raw) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kNonFinite, "non-finite entry");
    sq += x * x;
  }
  const double n = std::sqrt(sq);
  if (n < 1e-12) throw Error(ErrorCode::kZeroVector, "norm below 1e-12");
  std::vector<double> out(raw.begin(), raw.end());
  for (double& x : out) x /= n;
  return FeatureVector(std::move(out));
}

inline FeatureVector normalize(const std::vector<double>& raw) {
  return normalize(std::span<const double>(raw));
}

/// K unit-norm text prototypes, one per in-distribution class.
class ClassifierBank {
 public:
  static constexpr double kUnitTolerance = 1e-3;

  ClassifierBank(std::vector<FeatureVector> prototypes, std::vector<std::string> class_names)
      : prototypes_(std::move(prototypes)), class_names_(std::move(class_names)) {
    if (prototypes_.empty()) throw Error(ErrorCode::kBadSpec, "classifier bank needs K >= 1");
    if (class_names_.size() != prototypes_.size()) {
      throw Error(ErrorCode::kBadSpec, "class name count differs from prototype count");
    }
    const std::size_t d = prototypes_.front().dim();
    if (d == 0) throw Error(ErrorCode::kBadSpec, "zero-dimensional prototypes");
    norms_.reserve(prototypes_.size());
    for (const auto& p : prototypes_) {
      if (p.dim() != d) throw Error(ErrorCode::kDimMismatch, "prototype dims differ");
      const double n = p.norm();
      if (std::abs(n - 1.0) > kUnitTolerance) {
        throw Error(ErrorCode::kNotUnitNorm, "prototype norm " + std::to_string(n));
      }
      norms_.push_back(n);
    }
  }

  /// Names default to "class_<k>".
  explicit ClassifierBank(std::vector<FeatureVector> prototypes)
      : ClassifierBank(prototypes, default_names(prototypes.size())) {}

  std::size_t num_classes() const noexcept { return prototypes_.size(); }
  std::size_t dim() const noexcept { return prototypes_.front().dim(); }
  const FeatureVector& prototype(std::size_t k) const { return prototypes_[k]; }
  const std::vector<FeatureVector>& prototypes() const noexcept { return prototypes_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  double prototype_norm(std::size_t k) const { return norms_[k]; }

  static std::vector<std::string> default_names(std::size_t k) {
    std::vector<std::string> names;
    names.reserve(k);
    for (std::size_t i = 0; i < k; ++i) names.push_back("class_" + std::to_string(i));
    return names;
  }

  friend bool operator==(const ClassifierBank& a, const ClassifierBank& b) {
    return a.prototypes_ == b.prototypes_ && a.class_names_ == b.class_names_;
  }

 private:
  std::vector<FeatureVector> prototypes_;
  std::vector<std::string> class_names_;
  std::vector<double> norms_;
};

/// Class label with -1 reserved for "noisy". Used for both ground truth and
/// predictions.
class Label {
 public:
  static constexpr int kNoisyValue = -1;

  constexpr Label() = default;
  static constexpr Label id_class(int k) { return Label(k); }
  static constexpr Label noisy() { return Label(kNoisyValue); }
  /// Decodes the on-disk encoding (-1 or a class index).
  static constexpr Label from_raw(int raw) { return Label(raw); }

  constexpr bool is_noisy() const noexcept { return value_ == kNoisyValue; }
  constexpr int raw() const noexcept { return value_; }
  constexpr int class_index() const noexcept { return value_; }

  friend constexpr bool operator==(Label, Label) = default;

 private:
  constexpr explicit Label(int v) : value_(v) {}
  int value_ = kNoisyValue;
};

enum class NoiseType { kGaussian, kUniform, kSaltAndPepper, kPoisson, kSyntheticGaussianFeature };

inline std::string_view noise_type_name(NoiseType t) {
  switch (t) {
    case NoiseType::kGaussian: return "gaussian";
    case NoiseType::kUniform: return "uniform";
    case NoiseType::kSaltAndPepper: return "salt_and_pepper";
    case NoiseType::kPoisson: return "poisson";
    case NoiseType::kSyntheticGaussianFeature: return "synthetic_gaussian_feature";
  }
  return "unknown";
}

inline NoiseType parse_noise_type(std::string_view s) {
  for (NoiseType t : {NoiseType::kGaussian, NoiseType::kUniform, NoiseType::kSaltAndPepper,
                      NoiseType::kPoisson, NoiseType::kSyntheticGaussianFeature}) {
    if (noise_type_name(t) == s) return t;
  }
  throw Error(ErrorCode::kBadConfig, "unknown noise type '" + std::string(s) + "'");
}

struct Origin {
  enum class Kind { kOriginal, kInjected };
  Kind kind = Kind::kOriginal;
  NoiseType noise_type = NoiseType::kGaussian;  // meaningful only when injected

  static Origin original() { return {}; }
  static Origin injected(NoiseType t) { return {Kind::kInjected, t}; }
  bool is_injected() const noexcept { return kind == Kind::kInjected; }

  friend bool operator==(const Origin& a, const Origin& b) {
    return a.kind == b.kind && (a.kind == Kind::kOriginal || a.noise_type == b.noise_type);
  }
};

struct StreamRecord {
  FeatureVector feature;
  Label truth;
  Origin origin;

  friend bool operator==(const StreamRecord&, const StreamRecord&) = default;
};

/// Pre-encoded noise features drawn from when injecting.
struct NoiseBank {
  NoiseType noise_type = NoiseType::kSyntheticGaussianFeature;
  std::vector<FeatureVector> features;
};

}  // namespace zsntta
