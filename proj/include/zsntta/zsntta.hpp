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

#include "zsntta/decision_log.hpp"
#include "zsntta/detector.hpp"
#include "zsntta/error.hpp"
#include "zsntta/experiment.hpp"
#include "zsntta/feature.hpp"
#include "zsntta/feature_file.hpp"
#include "zsntta/metrics.hpp"
#include "zsntta/pipeline.hpp"
#include "zsntta/scoring.hpp"
#include "zsntta/synthetic.hpp"
#include "zsntta/threshold.hpp"
