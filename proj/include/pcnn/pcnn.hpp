/*
 * Copyright 2026 The PCNN Authors.
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

// Umbrella header for the whole library.

#pragma once

#include "pcnn/aggregator.hpp"
#include "pcnn/checkpoint.hpp"
#include "pcnn/common.hpp"
#include "pcnn/config.hpp"
#include "pcnn/corpus.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/metrics.hpp"
#include "pcnn/optim.hpp"
#include "pcnn/pcl.hpp"
#include "pcnn/pipeline.hpp"
#include "pcnn/protocol.hpp"
#include "pcnn/serialize.hpp"
#include "pcnn/synthgen.hpp"
#include "pcnn/trainer.hpp"
