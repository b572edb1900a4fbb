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

#include <gtest/gtest.h>

#include <cmath>

#include "pcnn/common.hpp"
#include "pcnn/optim.hpp"

namespace pcnn {
namespace {

TEST(Hashing, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Hashing, DeriveSeedSeparatesStages) {
  EXPECT_EQ(derive_seed(7, "synth"), mix64(7 ^ fnv1a64("synth")));
  EXPECT_NE(derive_seed(7, "synth"), derive_seed(7, "split"));
  EXPECT_NE(derive_seed(7, "synth"), derive_seed(8, "synth"));
}

TEST(Errors, KindsAndHierarchy) {
  EXPECT_EQ(ConfigError("x").kind(), ErrorKind::kConfig);
  EXPECT_EQ(CapabilityError("x").kind(), ErrorKind::kConfig);
  EXPECT_EQ(SchemaError(3, "x").kind(), ErrorKind::kData);
  EXPECT_EQ(CorruptCheckpointError("x").kind(), ErrorKind::kData);
  EXPECT_EQ(NonFiniteError("x").kind(), ErrorKind::kRuntime);
  EXPECT_STREQ(SchemaError(3, "bad").what(), "line 3: bad");
}

TEST(Warmup, TenPercentThenConstant) {
  WarmupSchedule s(2e-5, 0.10, 100);
  EXPECT_EQ(s.warmup_steps(), 10u);
  EXPECT_DOUBLE_EQ(s.lr(1), 2e-6);
  EXPECT_DOUBLE_EQ(s.lr(5), 1e-5);
  EXPECT_DOUBLE_EQ(s.lr(10), 2e-5);
  EXPECT_DOUBLE_EQ(s.lr(11), 2e-5);
  EXPECT_DOUBLE_EQ(s.lr(100), 2e-5);
}

TEST(Warmup, RoundsUpButNotOnFloatNoise) {
  EXPECT_EQ(WarmupSchedule(1, 0.1, 30).warmup_steps(), 3u);
  EXPECT_EQ(WarmupSchedule(1, 0.1, 31).warmup_steps(), 4u);
  EXPECT_EQ(WarmupSchedule(1, 0.1, 5).warmup_steps(), 1u);
  EXPECT_EQ(WarmupSchedule(1, 0.0, 5).warmup_steps(), 0u);
  EXPECT_DOUBLE_EQ(WarmupSchedule(1, 0.0, 5).lr(1), 1.0);
}

TEST(Adam, FirstStepMovesBySignTimesLr) {
  std::vector<double> w = {1.0, -2.0}, g = {0.5, -3.0};
  ParamList p = {{"w", w, 1, 2}}, gr = {{"g", g, 1, 2}};
  Adam adam;
  adam.step(p, gr, 0.1);
  EXPECT_NEAR(w[0], 0.9, 1e-6);
  EXPECT_NEAR(w[1], -1.9, 1e-6);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, ZeroLearningRateLeavesParams) {
  std::vector<double> w = {1.0, -2.0}, g = {0.5, -3.0};
  ParamList p = {{"w", w, 1, 2}}, gr = {{"g", g, 1, 2}};
  Adam adam;
  for (int i = 0; i < 5; ++i) adam.step(p, gr, 0.0);
  EXPECT_EQ(w, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<double> w = {5.0}, g = {0.0};
  ParamList p = {{"w", w, 1, 1}}, gr = {{"g", g, 1, 1}};
  Adam adam;
  for (int i = 0; i < 2000; ++i) {
    g[0] = 2.0 * (w[0] - 1.5);
    adam.step(p, gr, 0.05);
  }
  EXPECT_NEAR(w[0], 1.5, 1e-3);
}

TEST(Hyperparams, Defaults) {
  Hyperparams hp;
  EXPECT_EQ(hp.batch_size, 16);
  EXPECT_DOUBLE_EQ(hp.learning_rate, 2e-5);
  EXPECT_DOUBLE_EQ(hp.warmup_fraction, 0.10);
  hp.batch_size = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
}

}  // namespace
}  // namespace pcnn
