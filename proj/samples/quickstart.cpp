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

// Runs the frozen baseline and the adaptive detector over the same
// synthetic stream and prints both reports.

#include <cstdio>
#include <memory>

#include "zsntta/zsntta.hpp"

int main() {
  using namespace zsntta;

  SyntheticSpec spec;
  spec.num_classes = 10;
  spec.dim = 64;
  spec.n_per_class = 400;
  spec.n_ood = 4000;
  spec.ood_clusters = 1;
  spec.concentration = 15;
  spec.ood_concentration = 5;
  spec.common_weight = 3;
  spec.noise_bank_size = 1000;
  spec.noise_concentration = 3;
  const SyntheticStream data = synth_stream(spec);
  const auto stream = mix_streams(data.id_records, data.ood_records, 0.5, 0);

  PipelineConfig frozen;
  frozen.method = Method::kFrozenBaseline;
  PipelineConfig adaptive;
  adaptive.noise_bank = std::make_shared<const NoiseBank>(data.noise_bank);

  for (const auto& [name, config] : {std::pair{"frozen", frozen}, std::pair{"adand", adaptive}}) {
    const StreamResult r = run_stream(data.bank, stream, config);
    std::printf("== %s (%zu optimization steps, %zu injections)\n%s", name, r.completed_steps, r.injections,
                report_to_key_value(r.report).c_str());
  }
}
