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

#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "geometries.hpp"
#include "zsntta/pipeline.hpp"

namespace zsntta {
namespace {

ClassifierBank basis_bank(std::size_t k, std::size_t d) {
  std::vector<FeatureVector> protos;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> v(d, 0.0);
    v[i] = 1.0;
    protos.emplace_back(v);
  }
  return ClassifierBank(protos);
}

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s = geometry::two_cluster(seed);
  s.n_per_class = 60;
  s.n_ood = 600;
  s.noise_bank_size = 100;
  return s;
}

struct Fixture {
  SyntheticStream st;
  std::vector<StreamRecord> stream;
  std::shared_ptr<const NoiseBank> noise;
};

Fixture make(const SyntheticSpec& s, double ratio = 0.5, std::uint64_t mix_seed = 0) {
  Fixture f{synth_stream(s), {}, nullptr};
  f.stream = mix_streams(f.st.id_records, f.st.ood_records, ratio, mix_seed);
  f.noise = std::make_shared<const NoiseBank>(f.st.noise_bank);
  return f;
}

TEST(PseudoLabel, StrictInequality) {
  EXPECT_EQ(pseudo_label(0.9, 0.5), PseudoLabel::kClean);
  EXPECT_EQ(pseudo_label(0.5, 0.5), PseudoLabel::kNoise);
  EXPECT_EQ(pseudo_label(0.2, 0.5), PseudoLabel::kNoise);
}

TEST(ProcessSample, FrozenBaselineClassifiesConfidentSample) {
  PipelineConfig cfg;
  cfg.method = Method::kFrozenBaseline;
  cfg.threshold = ThresholdPolicy::fixed(0.5);
  const auto bank = basis_bank(5, 8);
  PipelineState state(8, cfg);
  std::vector<double> v(8, 0.0);
  v[3] = 1.0;
  const auto d = process_sample(state, cfg, bank, {FeatureVector(v), Label::id_class(3), {}});
  EXPECT_GT(d.mcm_score, 0.9);
  EXPECT_EQ(d.prediction, Label::id_class(3));
  EXPECT_EQ(d.stage, 1);
  EXPECT_FALSE(d.detector_score.has_value());
}

TEST(ProcessSample, DimMismatch) {
  PipelineConfig cfg;
  PipelineState state(8, cfg);
  EXPECT_THROW(process_sample(state, cfg, basis_bank(2, 8), {FeatureVector({1, 0}), Label::noisy(), {}}), Error);
}

TEST(Pipeline, ColdStartMatchesFrozenBaseline) {
  auto f = make(small_spec(0));
  PipelineConfig ada;
  ada.noise_bank = f.noise;
  PipelineConfig fb = ada;
  fb.method = Method::kFrozenBaseline;
  // Short enough that no optimization step completes.
  std::vector<StreamRecord> head(f.stream.begin(), f.stream.begin() + 100);
  const auto a = run_stream(f.st.bank, head, ada), b = run_stream(f.st.bank, head, fb);
  ASSERT_EQ(a.completed_steps, 0u);
  ASSERT_EQ(a.decisions.size(), b.decisions.size());
  for (std::size_t i = 0; i < a.decisions.size(); ++i) {
    EXPECT_EQ(a.decisions[i].prediction, b.decisions[i].prediction);
    EXPECT_EQ(a.decisions[i].stage, 1);
    EXPECT_EQ(*a.decisions[i].detector_score, 0.5);
  }
}

TEST(Pipeline, StageOnePredictionsIgnoreTheDetector) {
  auto f = make(small_spec(1));
  PipelineConfig ada;
  ada.noise_bank = f.noise;
  ada.warmup_steps = 1000;  // never leaves stage 1
  PipelineConfig fb = ada;
  fb.method = Method::kFrozenBaseline;
  const auto a = run_stream(f.st.bank, f.stream, ada), b = run_stream(f.st.bank, f.stream, fb);
  EXPECT_GT(a.completed_steps, 0u);
  ASSERT_EQ(a.decisions.size(), b.decisions.size());
  for (std::size_t i = 0; i < a.decisions.size(); ++i) EXPECT_EQ(a.decisions[i].prediction, b.decisions[i].prediction);
  EXPECT_EQ(a.report.acc_s, b.report.acc_s);
  EXPECT_EQ(a.report.acc_n, b.report.acc_n);
  EXPECT_EQ(a.report.acc_h, b.report.acc_h);
}

TEST(Pipeline, RankingMetricsUseOneScorePerMethod) {
  auto f = make(small_spec(1));
  PipelineConfig ada;
  ada.noise_bank = f.noise;
  PipelineConfig fb = ada;
  fb.method = Method::kFrozenBaseline;
  const auto a = run_stream(f.st.bank, f.stream, ada), b = run_stream(f.st.bank, f.stream, fb);
  MetricsAccumulator by_detector, by_mcm;
  for (const auto& d : original_decisions(a.decisions)) {
    ASSERT_TRUE(d.detector_score.has_value());
    by_detector.add(d.prediction, d.truth, *d.detector_score, d.origin);
  }
  for (const auto& d : original_decisions(b.decisions)) {
    EXPECT_FALSE(d.detector_score.has_value());
    by_mcm.add(d.prediction, d.truth, d.mcm_score, d.origin);
  }
  EXPECT_EQ(a.report, by_detector.finalize());
  EXPECT_EQ(b.report, by_mcm.finalize());
}

TEST(Pipeline, InjectionCount) {
  auto f = make(small_spec(2));
  PipelineConfig cfg;
  cfg.noise_bank = f.noise;
  std::vector<StreamRecord> head(f.stream.begin(), f.stream.begin() + 80);
  EXPECT_EQ(run_stream(f.st.bank, head, cfg).injections, 10u);
  cfg.noise_bank = nullptr;
  EXPECT_EQ(run_stream(f.st.bank, f.stream, cfg).injections, 0u);
}

TEST(Pipeline, InjectionCountFollowsFloorRule) {
  auto f = make(small_spec(3));
  for (std::size_t m : {1u, 3u, 7u, 8u, 50u}) {
    for (std::size_t n : {0u, 5u, 99u, 700u}) {
      PipelineConfig cfg;
      cfg.inject_every = m;
      cfg.noise_bank = f.noise;
      std::vector<StreamRecord> head(f.stream.begin(), f.stream.begin() + static_cast<std::ptrdiff_t>(n));
      const auto r = run_stream(f.st.bank, head, cfg);
      EXPECT_EQ(r.injections, n / m) << "M=" << m << " n=" << n;
      EXPECT_EQ(r.decisions.size(), n + n / m);
    }
  }
}

TEST(Pipeline, EveryOriginalSampleGetsOneDecisionInOrder) {
  auto f = make(small_spec(4));
  PipelineConfig cfg;
  cfg.noise_bank = f.noise;
  Pipeline p(f.st.bank, cfg);
  for (std::size_t i = 0; i < f.stream.size(); ++i) {
    const auto out = p.step(f.stream[i]);
    ASSERT_FALSE(out.empty());
    EXPECT_EQ(out[0].index, i);
    EXPECT_FALSE(out[0].origin.is_injected());
    EXPECT_EQ(out[0].truth, f.stream[i].truth);
    EXPECT_EQ(out.size(), (i + 1) % 8 == 0 ? 2u : 1u);
    if (out.size() == 2) {
      EXPECT_TRUE(out[1].origin.is_injected());
      EXPECT_EQ(out[1].index, i);
      EXPECT_EQ(out[1].pseudo, PseudoLabel::kNoise);
    }
  }
}

TEST(Pipeline, InjectedSamplesStayOutOfMetrics) {
  auto f = make(small_spec(5));
  PipelineConfig cfg;
  cfg.noise_bank = f.noise;
  const auto r = run_stream(f.st.bank, f.stream, cfg);
  EXPECT_EQ(r.report.n_id + r.report.n_noisy, f.stream.size());
  EXPECT_EQ(original_decisions(r.decisions).size(), f.stream.size());
  std::vector<StreamRecord> with_injected = f.stream;
  with_injected[3].origin = Origin::injected(NoiseType::kGaussian);
  EXPECT_THROW(run_stream(f.st.bank, with_injected, cfg), Error);
}

TEST(Pipeline, EmptyStream) {
  const auto r = run_stream(basis_bank(2, 4), {}, PipelineConfig{});
  EXPECT_TRUE(r.decisions.empty());
  EXPECT_TRUE(r.report.no_samples());
}

TEST(Pipeline, Deterministic) {
  auto f = make(small_spec(6));
  PipelineConfig cfg;
  cfg.noise_bank = f.noise;
  cfg.seed = 17;
  const auto a = run_stream(f.st.bank, f.stream, cfg), b = run_stream(f.st.bank, f.stream, cfg);
  EXPECT_EQ(a.decisions, b.decisions);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.detector, b.detector);
}

TEST(Pipeline, FrozenBaselineNeverTrains) {
  auto f = make(small_spec(7));
  PipelineConfig cfg;
  cfg.method = Method::kFrozenBaseline;
  cfg.noise_bank = f.noise;
  const auto r = run_stream(f.st.bank, f.stream, cfg);
  EXPECT_EQ(r.completed_steps, 0u);
  EXPECT_EQ(r.detector, LinearDetector(f.st.bank.dim()));
  for (const auto& d : r.decisions) {
    EXPECT_EQ(d.stage, 1);
    EXPECT_FALSE(d.detector_score.has_value());
  }
}

TEST(Pipeline, StageSwitchesOnceAfterWarmup) {
  auto f = make(small_spec(8));
  PipelineConfig cfg;
  cfg.noise_bank = f.noise;
  cfg.train_queue_len = 16;
  cfg.warmup_steps = 3;
  Pipeline p(f.st.bank, cfg);
  int prev = 1;
  std::size_t enqueued = 0;
  for (const auto& rec : f.stream) {
    const auto out = p.step(rec);
    // The sample's own enqueue (and any flush it triggers) precedes its
    // verdict; the injection that may follow comes after.
    ++enqueued;
    EXPECT_EQ(out[0].stage, enqueued / 16 >= 3 ? 2 : 1);
    enqueued += out.size() - 1;
    EXPECT_GE(out[0].stage, prev);
    prev = out[0].stage;
  }
  EXPECT_EQ(prev, 2);
}

TEST(Pipeline, DetectorWindowOnlyFedInStageTwo) {
  auto f = make(small_spec(9));
  PipelineConfig cfg;
  cfg.noise_bank = f.noise;
  cfg.warmup_steps = 1000;
  Pipeline p(f.st.bank, cfg);
  for (const auto& rec : f.stream) p.step(rec);
  EXPECT_TRUE(p.state().detector_queue.empty());
  EXPECT_FALSE(p.state().mcm_queue.empty());
}

TEST(Pipeline, StageTwoComparesDetectorScoreWithItsOwnThreshold) {
  auto f = make(small_spec(10));
  PipelineConfig cfg;
  cfg.noise_bank = f.noise;
  cfg.train_queue_len = 16;
  cfg.warmup_steps = 2;
  const auto r = run_stream(f.st.bank, f.stream, cfg);
  std::size_t stage2 = 0;
  for (const auto& d : original_decisions(r.decisions)) {
    if (d.stage != 2) continue;
    ++stage2;
    ASSERT_TRUE(d.detector_score.has_value());
    EXPECT_EQ(d.prediction.is_noisy(), !(*d.detector_score > d.lambda));
    EXPECT_EQ(d.decision_score(), *d.detector_score);
  }
  EXPECT_GT(stage2, 0u);
}

TEST(Pipeline, DetectorPseudoSourceFallsBackInStageOne) {
  auto f = make(small_spec(11));
  PipelineConfig det;
  det.pseudo_source = PseudoSource::kDetector;
  det.warmup_steps = 1000;
  PipelineConfig zs = det;
  zs.pseudo_source = PseudoSource::kZsClip;
  const auto a = run_stream(f.st.bank, f.stream, det), b = run_stream(f.st.bank, f.stream, zs);
  EXPECT_EQ(a.decisions, b.decisions);
  EXPECT_EQ(a.detector, b.detector);
}

TEST(Pipeline, OraclePseudoLabelsSeparateAfterFiftyFlushes) {
  // Perfectly separable: ID and OOD prototypes are unrelated directions.
  SyntheticSpec s;
  s.num_classes = 10;
  s.dim = 64;
  s.n_per_class = 600;
  s.n_ood = 6000;
  s.ood_clusters = 2;
  s.concentration = 30;
  s.seed = 3;
  auto f = make(s);
  PipelineConfig cfg;
  cfg.pseudo_source = PseudoSource::kOracle;
  cfg.train_queue_len = 64;
  const auto r = run_stream(f.st.bank, f.stream, cfg);
  ASSERT_GE(r.completed_steps, 60u);
  // Score the samples seen after the 50th flush.
  std::size_t correct = 0, total = 0;
  for (const auto& d : original_decisions(r.decisions)) {
    if (d.index < 50 * 64) continue;
    ++total;
    correct += d.prediction.is_noisy() == d.truth.is_noisy();
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);
}

TEST(Pipeline, AdaptiveDetectorBeatsFrozenBaselineOnTail) {
  auto f = make(geometry::two_cluster(0));
  PipelineConfig ada;
  ada.noise_bank = f.noise;
  PipelineConfig fb = ada;
  fb.method = Method::kFrozenBaseline;
  const auto a = run_stream(f.st.bank, f.stream, ada), b = run_stream(f.st.bank, f.stream, fb);
  auto tail_detection = [&](const StreamResult& r) {
    std::size_t correct = 0, total = 0;
    for (const auto& d : original_decisions(r.decisions)) {
      if (d.index < f.stream.size() / 2) continue;
      ++total;
      correct += d.prediction.is_noisy() == d.truth.is_noisy();
    }
    return static_cast<double>(correct) / static_cast<double>(total);
  };
  EXPECT_GT(tail_detection(a), tail_detection(b));
}

TEST(Pipeline, CleanStreamNeedsInjection) {
  auto f = make(geometry::two_cluster(0), 0.0);
  PipelineConfig with;
  with.noise_bank = f.noise;
  PipelineConfig without = with;
  without.noise_bank = nullptr;
  PipelineConfig fb = with;
  fb.method = Method::kFrozenBaseline;
  const double s_with = *run_stream(f.st.bank, f.stream, with).report.acc_s;
  const double s_without = *run_stream(f.st.bank, f.stream, without).report.acc_s;
  const double s_fb = *run_stream(f.st.bank, f.stream, fb).report.acc_s;
  EXPECT_GE(s_with, s_fb - 2.0);
  EXPECT_LT(s_without, s_with);
}

TEST(PipelineConfig, Validation) {
  auto bad = [](auto mutate) {
    PipelineConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), Error);
  };
  bad([](PipelineConfig& c) { c.inject_every = 0; });
  bad([](PipelineConfig& c) { c.train_queue_len = 0; });
  bad([](PipelineConfig& c) { c.score_queue_len = 0; });
  bad([](PipelineConfig& c) { c.tau = 0; });
  bad([](PipelineConfig& c) { c.lr = -1; });
  bad([](PipelineConfig& c) { c.noise_bank = std::make_shared<const NoiseBank>(); });
}

TEST(Names, RoundTrip) {
  for (auto m : {Method::kFrozenBaseline, Method::kAdaND}) EXPECT_EQ(parse_method(method_name(m)), m);
  for (auto p : {PseudoSource::kZsClip, PseudoSource::kDetector, PseudoSource::kOracle}) {
    EXPECT_EQ(parse_pseudo_source(pseudo_source_name(p)), p);
  }
  EXPECT_THROW(parse_method("tent"), Error);
  EXPECT_THROW(parse_pseudo_source("gt"), Error);
}

}  // namespace
}  // namespace zsntta
