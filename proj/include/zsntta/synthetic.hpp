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
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "zsntta/error.hpp"
#include "zsntta/feature.hpp"

namespace zsntta {

/// Clustered embedding testbed. ID features are Gaussian perturbations
/// (per-coordinate scale 1/concentration) of K random unit prototypes,
/// renormalized; the prototypes double as the classifier bank. OOD features
/// are perturbations of `ood_clusters` further prototypes.
struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::size_t dim = 64;
  std::size_t n_per_class = 100;
  std::size_t n_ood = 1000;
  std::size_t ood_clusters = 4;
  double concentration = 8.0;
  /// 0 means "same as concentration".
  double ood_concentration = 0.0;
  /// Pulls each OOD prototype toward ID prototype (c mod K); 0 keeps them
  /// independent, 1 makes them coincide.
  double ood_mix = 0.0;
  /// Weight of a direction shared by every prototype (ID and OOD) before
  /// normalization; pairwise prototype cosine is about w^2 / (w^2 + 1).
  /// Mutually similar prototypes shrink the similarity gaps between classes.
  double common_weight = 0.0;
  /// Size of the companion noise bank; 0 skips it.
  std::size_t noise_bank_size = 0;
  double noise_concentration = 4.0;
  std::uint64_t seed = 0;
};

struct SyntheticStream {
  ClassifierBank bank;
  std::vector<StreamRecord> id_records;
  std::vector<StreamRecord> ood_records;
  /// Injection features drawn around their own prototype in the same
  /// geometry; empty when noise_bank_size is 0.
  NoiseBank noise_bank;
};

namespace detail {

inline std::vector<double> gaussian_vector(std::mt19937_64& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = scale * gauss(rng);
  return v;
}

inline FeatureVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  return normalize(gaussian_vector(rng, dim, 1.0));
}

inline FeatureVector perturb(std::mt19937_64& rng, const FeatureVector& center, double concentration) {
  if (std::isinf(concentration)) return center;
  std::vector<double> v = gaussian_vector(rng, center.dim(), 1.0 / concentration);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] += center[j];
  return normalize(v);
}

}  // namespace detail

/// Throws BadSpec when `spec` cannot be generated.
inline void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw Error(ErrorCode::kBadSpec, "K must be >= 2");
  if (spec.dim < 2) throw Error(ErrorCode::kBadSpec, "D must be >= 2");
  if (!(spec.concentration > 0.0)) throw Error(ErrorCode::kBadSpec, "concentration must be > 0");
  if (spec.ood_concentration < 0.0 || std::isnan(spec.ood_concentration)) {
    throw Error(ErrorCode::kBadSpec, "ood_concentration must be >= 0");
  }
  if (!(spec.ood_mix >= 0.0 && spec.ood_mix <= 1.0)) {
    throw Error(ErrorCode::kBadSpec, "ood_mix must lie in [0, 1]");
  }
  if (spec.n_ood > 0 && spec.ood_clusters == 0) {
    throw Error(ErrorCode::kBadSpec, "OOD records requested with zero OOD clusters");
  }
  if (!(spec.common_weight >= 0.0) || !std::isfinite(spec.common_weight)) {
    throw Error(ErrorCode::kBadSpec, "common_weight must be >= 0");
  }
  if (spec.noise_bank_size > 0 && !(spec.noise_concentration > 0.0)) {
    throw Error(ErrorCode::kBadSpec, "noise_concentration must be > 0");
  }
}

inline SyntheticStream synth_stream(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);

  std::mt19937_64 rng(spec.seed);
  const FeatureVector common = detail::random_unit(rng, spec.dim);
  auto draw_prototype = [&] {
    FeatureVector r = detail::random_unit(rng, spec.dim);
    if (spec.common_weight == 0.0) return r;
    std::vector<double> v(spec.dim);
    for (std::size_t j = 0; j < spec.dim; ++j) v[j] = spec.common_weight * common[j] + r[j];
    return normalize(v);
  };
  std::vector<FeatureVector> prototypes;
  prototypes.reserve(spec.num_classes);
  for (std::size_t k = 0; k < spec.num_classes; ++k) prototypes.push_back(draw_prototype());

  std::vector<FeatureVector> ood_prototypes;
  for (std::size_t c = 0; c < spec.ood_clusters; ++c) {
    FeatureVector base = draw_prototype();
    if (spec.ood_mix > 0.0) {
      const FeatureVector& anchor = prototypes[c % spec.num_classes];
      std::vector<double> mixed(spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        mixed[j] = (1.0 - spec.ood_mix) * base[j] + spec.ood_mix * anchor[j];
      }
      base = normalize(mixed);
    }
    ood_prototypes.push_back(std::move(base));
  }

  SyntheticStream out{ClassifierBank(prototypes), {}, {}, {NoiseType::kSyntheticGaussianFeature, {}}};
  out.id_records.reserve(spec.num_classes * spec.n_per_class);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    for (std::size_t i = 0; i < spec.n_per_class; ++i) {
      out.id_records.push_back({detail::perturb(rng, prototypes[k], spec.concentration),
                                Label::id_class(static_cast<int>(k)), Origin::original()});
    }
  }
  const double ood_conc = spec.ood_concentration > 0.0 ? spec.ood_concentration : spec.concentration;
  out.ood_records.reserve(spec.n_ood);
  for (std::size_t i = 0; i < spec.n_ood; ++i) {
    out.ood_records.push_back({detail::perturb(rng, ood_prototypes[i % spec.ood_clusters], ood_conc),
                               Label::noisy(), Origin::original()});
  }
  if (spec.noise_bank_size > 0) {
    if (!(spec.noise_concentration > 0.0)) throw Error(ErrorCode::kBadSpec, "noise_concentration must be > 0");
    const FeatureVector noise_center = draw_prototype();
    out.noise_bank.features.reserve(spec.noise_bank_size);
    for (std::size_t i = 0; i < spec.noise_bank_size; ++i) {
      out.noise_bank.features.push_back(detail::perturb(rng, noise_center, spec.noise_concentration));
    }
  }
  return out;
}

struct NoiseBankSpec {
  std::size_t dim = 64;
  std::size_t count = 1000;
  /// Spread around a shared random noise direction; 0 draws isotropic
  /// directions with no common center.
  double concentration = 4.0;
  std::uint64_t seed = 0;
};

/// Feature-space stand-in for encoded noise images.
inline NoiseBank synth_noise_bank(const NoiseBankSpec& spec) {
  if (spec.count == 0) throw Error(ErrorCode::kBadSpec, "noise bank count must be positive");
  if (spec.dim < 2) throw Error(ErrorCode::kBadSpec, "D must be >= 2");
  if (spec.concentration < 0.0 || std::isnan(spec.concentration)) {
    throw Error(ErrorCode::kBadSpec, "concentration must be >= 0");
  }
  // Offset the stream so a bank and a stream sharing a seed stay unrelated.
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  NoiseBank bank{NoiseType::kSyntheticGaussianFeature, {}};
  bank.features.reserve(spec.count);
  if (spec.concentration == 0.0) {
    for (std::size_t i = 0; i < spec.count; ++i) bank.features.push_back(detail::random_unit(rng, spec.dim));
    return bank;
  }
  const FeatureVector center = detail::random_unit(rng, spec.dim);
  for (std::size_t i = 0; i < spec.count; ++i) {
    bank.features.push_back(detail::perturb(rng, center, spec.concentration));
  }
  return bank;
}

/// Number of noisy records that realizes `noise_ratio` alongside `n_id`
/// clean ones.
inline std::size_t noisy_count_for_ratio(std::size_t n_id, double noise_ratio) {
  if (noise_ratio >= 1.0) return std::numeric_limits<std::size_t>::max();
  return static_cast<std::size_t>(std::llround(noise_ratio * static_cast<double>(n_id) / (1.0 - noise_ratio)));
}

/// Interleaves clean and noisy records at the requested noise ratio. All
/// clean records are kept (none when the ratio is 1) and a seeded subset
/// of the noisy ones is drawn; the result is a seeded uniform shuffle.
inline std::vector<StreamRecord> mix_streams(const std::vector<StreamRecord>& id_records,
                                             const std::vector<StreamRecord>& ood_records,
                                             double noise_ratio, std::uint64_t seed) {
  if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0)) {
    throw Error(ErrorCode::kBadSpec, "noise_ratio must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  const bool noisy_only = noise_ratio >= 1.0;
  const std::size_t want_ood =
      noisy_only ? ood_records.size() : noisy_count_for_ratio(id_records.size(), noise_ratio);
  if (want_ood > ood_records.size() || (noisy_only && ood_records.empty())) {
    throw Error(ErrorCode::kInsufficientRecords,
                "ratio " + std::to_string(noise_ratio) + " needs " + std::to_string(want_ood) +
                    " noisy records, have " + std::to_string(ood_records.size()));
  }

  std::vector<std::size_t> pick(ood_records.size());
  std::iota(pick.begin(), pick.end(), 0);
  std::shuffle(pick.begin(), pick.end(), rng);

  std::vector<StreamRecord> out;
  out.reserve((noisy_only ? 0 : id_records.size()) + want_ood);
  if (!noisy_only) out.insert(out.end(), id_records.begin(), id_records.end());
  for (std::size_t i = 0; i < want_ood; ++i) out.push_back(ood_records[pick[i]]);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace zsntta
