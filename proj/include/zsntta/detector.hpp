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
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "zsntta/error.hpp"
#include "zsntta/feature.hpp"

namespace zsntta {

/// Binary clean/noise target. The numeric value is the detector output
/// index.
enum class PseudoLabel : int { kClean = 0, kNoise = 1 };

inline std::string_view pseudo_label_name(PseudoLabel p) {
  return p == PseudoLabel::kClean ? "clean" : "noise";
}

using Logits = std::array<double, 2>;

/// Two-output linear layer over frozen features. Parameters are stored flat
/// as [w_clean (D), w_noise (D), b_clean, b_noise] and start at zero.
class LinearDetector {
 public:
  static constexpr std::size_t kOutputs = 2;

  explicit LinearDetector(std::size_t dim) : dim_(dim), params_(kOutputs * dim + kOutputs, 0.0) {
    if (dim == 0) throw Error(ErrorCode::kBadSpec, "detector dim must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  double weight(std::size_t out, std::size_t j) const { return params_[out * dim_ + j]; }
  double& weight(std::size_t out, std::size_t j) { return params_[out * dim_ + j]; }
  double bias(std::size_t out) const { return params_[kOutputs * dim_ + out]; }
  double& bias(std::size_t out) { return params_[kOutputs * dim_ + out]; }

  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  friend bool operator==(const LinearDetector&, const LinearDetector&) = default;

 private:
  std::size_t dim_;
  std::vector<double> params_;
};

inline Logits forward(const LinearDetector& det, const FeatureVector& f) {
  if (f.dim() != det.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "feature dim " + std::to_string(f.dim()) + " vs detector dim " + std::to_string(det.dim()));
  }
  const auto x = f.values();
  const auto p = det.params();
  const std::size_t d = det.dim();
  Logits z{p[2 * d], p[2 * d + 1]};
  for (std::size_t j = 0; j < d; ++j) {
    z[0] += p[j] * x[j];
    z[1] += p[d + j] * x[j];
  }
  return z;
}

/// softmax(logits)[clean], evaluated without overflow for any finite
/// logit gap.
inline double clean_probability(const Logits& z) {
  const double gap = z[0] - z[1];
  if (gap >= 0.0) return 1.0 / (1.0 + std::exp(-gap));
  const double e = std::exp(gap);
  return e / (1.0 + e);
}

struct TrainingSample {
  FeatureVector feature;
  PseudoLabel pseudo = PseudoLabel::kClean;
  /// Logits at enqueue time. Diagnostic only; training recomputes them.
  Logits cached_logits{0.0, 0.0};
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grads;  // same layout as LinearDetector::params()
};

/// Mean cross-entropy of softmax(forward(f)) against the pseudo-labels, with
/// its exact gradient.
inline LossAndGrad ce_loss_and_grad(const LinearDetector& det, std::span<const TrainingSample> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "cross-entropy on an empty batch");
  const std::size_t d = det.dim();
  LossAndGrad out{0.0, std::vector<double>(det.param_count(), 0.0)};
  for (const auto& s : batch) {
    const Logits z = forward(det, s.feature);
    const int y = static_cast<int>(s.pseudo);
    const double top = std::max(z[0], z[1]);
    const double lse = top + std::log(std::exp(z[0] - top) + std::exp(z[1] - top));
    out.loss += lse - z[y];
    // dL/dz = softmax(z) - onehot(y)
    const double p_clean = clean_probability(z);
    const double dz[2] = {p_clean - (y == 0 ? 1.0 : 0.0), (1.0 - p_clean) - (y == 1 ? 1.0 : 0.0)};
    const auto x = s.feature.values();
    for (std::size_t j = 0; j < d; ++j) {
      out.grads[j] += dz[0] * x[j];
      out.grads[d + j] += dz[1] * x[j];
    }
    out.grads[2 * d] += dz[0];
    out.grads[2 * d + 1] += dz[1];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& g : out.grads) g *= inv;
  return out;
}

struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Coupled L2 term added to the gradient.
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  AdamState(std::size_t param_count, AdamConfig cfg = {})
      : config(cfg), m(param_count, 0.0), v(param_count, 0.0) {}
};

/// One bias-corrected Adam update over a flat parameter vector.
inline void adam_update(std::span<double> theta, AdamState& adam, std::span<const double> grads) {
  if (theta.size() != grads.size() || adam.m.size() != theta.size() || adam.v.size() != theta.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter, gradient and moment sizes differ");
  }
  const AdamConfig& c = adam.config;
  adam.t += 1;
  const double t = static_cast<double>(adam.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grads[i] + c.weight_decay * theta[i];
    adam.m[i] = c.beta1 * adam.m[i] + (1.0 - c.beta1) * g;
    adam.v[i] = c.beta2 * adam.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = adam.m[i] / correction1;
    const double v_hat = adam.v[i] / correction2;
    theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

inline void adam_step(LinearDetector& det, AdamState& adam, std::span<const double> grads) {
  adam_update(det.params(), adam, grads);
}

/// Holds up to L samples between optimization steps.
class TrainingQueue {
 public:
  explicit TrainingQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error(ErrorCode::kBadSpec, "training queue capacity must be >= 1");
    samples_.reserve(capacity);
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool full() const noexcept { return samples_.size() >= capacity_; }
  std::span<const TrainingSample> samples() const noexcept { return samples_; }

  void push(TrainingSample s) { samples_.push_back(std::move(s)); }
  void clear() noexcept { samples_.clear(); }

 private:
  std::size_t capacity_;
  std::vector<TrainingSample> samples_;
};

/// Appends one sample; once the queue holds L samples, takes exactly one
/// Adam step on their mean cross-entropy and empties the queue. Returns
/// whether a step was taken.
inline bool enqueue_and_maybe_train(TrainingQueue& q, LinearDetector& det, AdamState& adam,
                                    const FeatureVector& feature, PseudoLabel pseudo) {
  q.push({feature, pseudo, forward(det, feature)});
  if (!q.full()) return false;
  const LossAndGrad lg = ce_loss_and_grad(det, q.samples());
  adam_step(det, adam, lg.grads);
  q.clear();
  return true;
}

// Checkpoint layout (little-endian): "ZNTD", u32 version=1, u32 D, u64 t,
// then 2D+2 f64 parameters in LinearDetector::params() order.
inline constexpr char kCheckpointMagic[4] = {'Z', 'N', 'T', 'D'};

struct DetectorCheckpoint {
  LinearDetector detector;
  std::uint64_t step = 0;
};

inline std::vector<unsigned char> encode_checkpoint(const LinearDetector& det, std::uint64_t step) {
  std::vector<unsigned char> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  auto put = [&out](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  put(1, 4);
  put(det.dim(), 4);
  put(step, 8);
  for (double x : det.params()) put(std::bit_cast<std::uint64_t>(x), 8);
  return out;
}

inline DetectorCheckpoint decode_checkpoint(std::span<const unsigned char> bytes) {
  auto get = [&bytes](std::size_t off, int n) {
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | bytes[off + i];
    return v;
  };
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "missing ZNTD magic");
  }
  if (get(4, 4) != 1) throw Error(ErrorCode::kUnsupportedVersion, "checkpoint version");
  const std::size_t dim = get(8, 4);
  DetectorCheckpoint c{LinearDetector(dim), get(12, 8)};
  const std::size_t need = 20 + 8 * c.detector.param_count();
  if (bytes.size() < need) throw Error(ErrorCode::kTruncatedPayload, "checkpoint too short");
  if (bytes.size() > need) throw Error(ErrorCode::kTrailingBytes, "checkpoint too long");
  auto p = c.detector.params();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::bit_cast<double>(get(20 + 8 * i, 8));
  return c;
}

inline void write_checkpoint(const LinearDetector& det, const AdamState& adam,
                             const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(det, adam.t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

inline DetectorCheckpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace zsntta
