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

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "zsntta/detector.hpp"
#include "zsntta/error.hpp"
#include "zsntta/feature.hpp"
#include "zsntta/metrics.hpp"
#include "zsntta/scoring.hpp"
#include "zsntta/threshold.hpp"

namespace zsntta {

enum class Method { kFrozenBaseline, kAdaND };
enum class PseudoSource { kZsClip, kDetector, kOracle };

inline std::string_view method_name(Method m) {
  return m == Method::kFrozenBaseline ? "frozen" : "adand";
}

inline Method parse_method(std::string_view s) {
  if (s == "frozen" || s == "zs-clip" || s == "zsclip") return Method::kFrozenBaseline;
  if (s == "adand") return Method::kAdaND;
  throw Error(ErrorCode::kBadConfig, "unknown method '" + std::string(s) + "'");
}

inline std::string_view pseudo_source_name(PseudoSource p) {
  switch (p) {
    case PseudoSource::kZsClip: return "zsclip";
    case PseudoSource::kDetector: return "detector";
    case PseudoSource::kOracle: return "oracle";
  }
  return "unknown";
}

inline PseudoSource parse_pseudo_source(std::string_view s) {
  if (s == "zsclip" || s == "zs-clip") return PseudoSource::kZsClip;
  if (s == "detector") return PseudoSource::kDetector;
  if (s == "oracle") return PseudoSource::kOracle;
  throw Error(ErrorCode::kBadConfig, "unknown pseudo-label source '" + std::string(s) + "'");
}

struct PipelineConfig {
  double tau = 0.01;
  /// One injected noise sample after every M original samples.
  std::size_t inject_every = 8;
  /// Training queue length L.
  std::size_t train_queue_len = 128;
  /// Score window N_q for both adaptive thresholds.
  std::size_t score_queue_len = 512;
  /// Completed optimization steps before the detector takes over.
  std::size_t warmup_steps = 10;
  double lr = 0.0005;
  Method method = Method::kAdaND;
  PseudoSource pseudo_source = PseudoSource::kZsClip;
  ThresholdPolicy threshold = ThresholdPolicy::adaptive();
  /// Injection is on exactly when a bank is set.
  std::shared_ptr<const NoiseBank> noise_bank;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tau > 0.0)) throw Error(ErrorCode::kBadConfig, "tau must be > 0");
    if (inject_every < 1) throw Error(ErrorCode::kBadConfig, "M must be >= 1");
    if (train_queue_len < 1) throw Error(ErrorCode::kBadConfig, "L must be >= 1");
    if (score_queue_len < 1) throw Error(ErrorCode::kBadConfig, "N_q must be >= 1");
    if (!(lr > 0.0)) throw Error(ErrorCode::kBadConfig, "lr must be > 0");
    if (noise_bank && noise_bank->features.empty()) throw Error(ErrorCode::kEmptyBank, "noise bank is empty");
  }

  bool injection_on() const noexcept { return noise_bank != nullptr; }
};

struct SampleDecision {
  std::size_t index = 0;
  Label truth;
  Label prediction;
  int stage = 1;
  double mcm_score = 0.0;
  std::optional<double> detector_score;
  PseudoLabel pseudo = PseudoLabel::kClean;
  double lambda = 0.0;
  Origin origin;

  /// The score that was compared against `lambda`.
  double decision_score() const { return stage == 2 ? *detector_score : mcm_score; }

  /// Score used for the ranking metrics: the detector's clean probability
  /// whenever the run has a detector, else the max-softmax score. Keeping
  /// one score per run avoids ranking two different scales together.
  double ranking_score() const { return detector_score.value_or(mcm_score); }

  friend bool operator==(const SampleDecision&, const SampleDecision&) = default;
};

inline PseudoLabel pseudo_label(double score, double lambda) {
  return score > lambda ? PseudoLabel::kClean : PseudoLabel::kNoise;
}

/// All mutable state of one pipeline run. Single owner, single thread.
struct PipelineState {
  ScoreQueue mcm_queue;
  ScoreQueue detector_queue;
  TrainingQueue train_queue;
  LinearDetector detector;
  AdamState adam;
  std::size_t completed_steps = 0;
  std::size_t samples_seen = 0;
  std::size_t injections = 0;
  std::size_t last_injection_at = 0;
  std::mt19937_64 rng;

  PipelineState(std::size_t dim, const PipelineConfig& config)
      : mcm_queue(config.score_queue_len),
        detector_queue(config.score_queue_len),
        train_queue(config.train_queue_len),
        detector(dim),
        adam(detector.param_count(), AdamConfig{.lr = config.lr}),
        rng(config.seed) {
    config.validate();
  }

  int stage(const PipelineConfig& config) const noexcept {
    return config.method == Method::kAdaND && completed_steps >= config.warmup_steps ? 2 : 1;
  }
};

namespace detail {

inline void train_on(PipelineState& state, const FeatureVector& f, PseudoLabel pseudo) {
  if (enqueue_and_maybe_train(state.train_queue, state.detector, state.adam, f, pseudo)) {
    ++state.completed_steps;
  }
}

/// Verdict under the current stage; pushes the detector score when the
/// detector is in charge.
inline void decide(PipelineState& state, const PipelineConfig& config, const FeatureVector& f,
                   const SimilarityVector& sims, double lambda_zs, SampleDecision& d) {
  d.stage = state.stage(config);
  if (d.stage == 1) {
    if (config.method == Method::kAdaND) d.detector_score = clean_probability(forward(state.detector, f));
    d.lambda = lambda_zs;
    d.prediction = d.mcm_score > lambda_zs ? Label::id_class(static_cast<int>(classify(sims))) : Label::noisy();
    return;
  }
  const double p = clean_probability(forward(state.detector, f));
  state.detector_queue.push(p);
  d.detector_score = p;
  d.lambda = effective_threshold(config.threshold, state.detector_queue);
  d.prediction = p > d.lambda ? Label::id_class(static_cast<int>(classify(sims))) : Label::noisy();
}

}  // namespace detail

/// Runs one original stream sample through scoring, pseudo-labeling,
/// detector training and the staged verdict.
inline SampleDecision process_sample(PipelineState& state, const PipelineConfig& config,
                                     const ClassifierBank& bank, const StreamRecord& record) {
  if (record.feature.dim() != bank.dim() || record.feature.dim() != state.detector.dim()) {
    throw Error(ErrorCode::kDimMismatch, "record dim does not match the classifier bank");
  }
  SampleDecision d;
  d.index = state.samples_seen++;
  d.truth = record.truth;
  d.origin = record.origin;

  const Temperature tau(config.tau);
  const SimilarityVector sims = cosine_similarities(record.feature, bank);
  d.mcm_score = mcm_score(sims, tau);
  state.mcm_queue.push(d.mcm_score);
  const double lambda_zs = effective_threshold(config.threshold, state.mcm_queue);
  const PseudoLabel zs_pseudo = pseudo_label(d.mcm_score, lambda_zs);

  if (config.method == Method::kAdaND) {
    switch (config.pseudo_source) {
      case PseudoSource::kZsClip:
        d.pseudo = zs_pseudo;
        break;
      case PseudoSource::kOracle:
        d.pseudo = record.truth.is_noisy() ? PseudoLabel::kNoise : PseudoLabel::kClean;
        break;
      case PseudoSource::kDetector:
        // The untrained detector has nothing to say; lean on the frozen
        // model until the detector has its own score window.
        if (state.stage(config) == 2 && !state.detector_queue.empty()) {
          const double p = clean_probability(forward(state.detector, record.feature));
          d.pseudo = pseudo_label(p, effective_threshold(config.threshold, state.detector_queue));
        } else {
          d.pseudo = zs_pseudo;
        }
        break;
    }
    detail::train_on(state, record.feature, d.pseudo);
  } else {
    d.pseudo = zs_pseudo;
  }

  detail::decide(state, config, record.feature, sims, lambda_zs, d);
  return d;
}

/// After every M-th original sample, scores one feature drawn (with
/// replacement) from the noise bank, feeds it to both score windows and
/// the training queue as noise, and returns its diagnostic decision.
inline std::optional<SampleDecision> inject_noise_if_due(PipelineState& state, const PipelineConfig& config,
                                                         const ClassifierBank& bank) {
  if (!config.injection_on()) return std::nullopt;
  if (state.samples_seen == 0 || state.samples_seen % config.inject_every != 0 ||
      state.last_injection_at == state.samples_seen) {
    return std::nullopt;
  }
  const NoiseBank& noise = *config.noise_bank;
  if (noise.features.empty()) throw Error(ErrorCode::kEmptyBank, "noise bank is empty");
  state.last_injection_at = state.samples_seen;
  ++state.injections;

  std::uniform_int_distribution<std::size_t> pick(0, noise.features.size() - 1);
  const FeatureVector& f = noise.features[pick(state.rng)];
  if (f.dim() != bank.dim()) throw Error(ErrorCode::kDimMismatch, "noise bank dim differs from classifier");

  SampleDecision d;
  d.index = state.samples_seen - 1;
  d.truth = Label::noisy();
  d.origin = Origin::injected(noise.noise_type);
  d.pseudo = PseudoLabel::kNoise;

  const SimilarityVector sims = cosine_similarities(f, bank);
  d.mcm_score = mcm_score(sims, Temperature(config.tau));
  state.mcm_queue.push(d.mcm_score);
  const double lambda_zs = effective_threshold(config.threshold, state.mcm_queue);
  if (config.method == Method::kAdaND) detail::train_on(state, f, PseudoLabel::kNoise);
  detail::decide(state, config, f, sims, lambda_zs, d);
  return d;
}

/// Owns the state for one online run over a fixed classifier bank.
class Pipeline {
 public:
  Pipeline(ClassifierBank bank, PipelineConfig config)
      : bank_(std::move(bank)), config_(std::move(config)), state_(bank_.dim(), config_) {}

  /// Processes one original sample, then performs any injection it makes
  /// due. The first returned decision is always the sample's own.
  std::vector<SampleDecision> step(const StreamRecord& record) {
    std::vector<SampleDecision> out;
    out.push_back(process_sample(state_, config_, bank_, record));
    if (auto inj = inject_noise_if_due(state_, config_, bank_)) out.push_back(*inj);
    return out;
  }

  const PipelineState& state() const noexcept { return state_; }
  const PipelineConfig& config() const noexcept { return config_; }
  const ClassifierBank& bank() const noexcept { return bank_; }

 private:
  ClassifierBank bank_;
  PipelineConfig config_;
  PipelineState state_;
};

struct StreamResult {
  /// Every decision in processing order, injected ones included.
  std::vector<SampleDecision> decisions;
  MetricsAccumulator accumulator;
  MetricsReport report;
  std::size_t completed_steps = 0;
  std::size_t injections = 0;
  LinearDetector detector{1};
};

inline void accumulate(MetricsAccumulator& acc, const SampleDecision& d, Label truth) {
  acc.add(d.prediction, truth, d.ranking_score(), d.origin);
}

inline std::vector<SampleDecision> original_decisions(const std::vector<SampleDecision>& all) {
  std::vector<SampleDecision> out;
  out.reserve(all.size());
  for (const auto& d : all) {
    if (!d.origin.is_injected()) out.push_back(d);
  }
  return out;
}

/// Strictly sequential online run; only original-stream decisions reach the
/// metrics.
inline StreamResult run_stream(const ClassifierBank& bank, const std::vector<StreamRecord>& records,
                               const PipelineConfig& config) {
  Pipeline pipeline(bank, config);
  StreamResult result;
  result.decisions.reserve(records.size() + records.size() / config.inject_every + 1);
  for (const auto& rec : records) {
    if (rec.origin.is_injected()) throw Error(ErrorCode::kInjectedRecord, "input stream holds injected records");
    for (auto& d : pipeline.step(rec)) {
      if (!d.origin.is_injected()) accumulate(result.accumulator, d, d.truth);
      result.decisions.push_back(std::move(d));
    }
  }
  result.report = result.accumulator.finalize();
  result.completed_steps = pipeline.state().completed_steps;
  result.injections = pipeline.state().injections;
  result.detector = pipeline.state().detector;
  return result;
}

}  // namespace zsntta
