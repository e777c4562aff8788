/**
 * Copyright (c) 2026 The parabench authors.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing,
 *  software distributed under the License is distributed on an "AS
 *  IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either
 *  express or implied.  See the License for the specific language
 *  governing permissions and limitations under the License.
 */
#pragma once

#include "parabench/embedding.hpp"
#include "parabench/error.hpp"
#include "parabench/evaluate.hpp"
#include "parabench/manifest.hpp"
#include "parabench/metrics.hpp"
#include "parabench/numeric.hpp"
#include "parabench/pemb.hpp"
#include "parabench/ranked_list.hpp"
#include "parabench/report.hpp"
#include "parabench/retrieval.hpp"
#include "parabench/rng.hpp"
#include "parabench/threads.hpp"
#include "parabench/version.hpp"

#include "parabench/duotower/experiment.hpp"
#include "parabench/duotower/infonce.hpp"
#include "parabench/duotower/linalg.hpp"
#include "parabench/duotower/optim.hpp"
#include "parabench/duotower/pretrain.hpp"
#include "parabench/duotower/synth.hpp"
#include "parabench/duotower/tower.hpp"
#include "parabench/duotower/train.hpp"
#include "parabench/duotower/weights_io.hpp"
