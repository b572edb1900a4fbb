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

#include "pcnn/pipeline.hpp"
#include "pcnn/synthgen.hpp"
#include "test_util.hpp"

namespace pcnn {
namespace {

struct Fixture {
  std::vector<Article> train, test;
  std::vector<NLIExample> nli;
};

const Fixture& synthetic() {
  static const Fixture f = [] {
    auto corpus = load_corpus(testing::data_path("synthetic_corpus.jsonl"));
    auto split = split_train_test(corpus, {0.8, 5, {}});
    return Fixture{split.train, split.test, generate_nli(default_synth_spec(), 1000)};
  }();
  return f;
}

Hyperparams hp(int epochs, double lr, std::uint64_t seed = 1) {
  Hyperparams h;
  h.epochs = epochs;
  h.learning_rate = lr;
  h.seed = seed;
  return h;
}

Model pretrained_model() {
  ToyEncoder enc(EncoderConfig{});
  auto pcl = pretrain(synthetic().nli, enc, init_pcl(128, 128, 2), hp(20, 1e-3));
  Model m = init_model(EncoderConfig{}, ModelDims{}, PairScope::kParagraph, {}, 4);
  m.pcl = pcl.params;
  return m;
}

TEST(Finetune, SyntheticTrainingAccuracy) {
  const auto& f = synthetic();
  ASSERT_EQ(f.train.size(), 160u);
  ToyEncoder enc(EncoderConfig{});
  auto r = finetune(f.train, pretrained_model(), hp(20, 1e-3), enc);
  EXPECT_EQ(r.log.epoch_loss.size(), 20u);
  EXPECT_EQ(r.log.steps, 200u);
  EXPECT_LT(r.log.final_loss(), r.log.epoch_loss.front());
  EXPECT_GE(accuracy(f.train, r.model, enc), 0.95);
}

TEST(Finetune, ZeroLearningRateChangesNothing) {
  const auto& f = synthetic();
  ToyEncoder enc(EncoderConfig{});
  Model init = init_model(EncoderConfig{}, ModelDims{128, 16, 8, 8, 10}, PairScope::kParagraph, {}, 4);
  auto r = finetune(std::span(f.train).first(32), init, hp(3, 0.0), enc);
  EXPECT_EQ(r.model.pcl.transform, init.pcl.transform);
  EXPECT_EQ(r.model.agg.hidden_w, init.agg.hidden_w);
  for (std::size_t e = 1; e < r.log.epoch_loss.size(); ++e)
    EXPECT_DOUBLE_EQ(r.log.epoch_loss[e], r.log.epoch_loss[0]);
}

TEST(Finetune, SameSeedBitIdentical) {
  const auto& f = synthetic();
  ToyEncoder enc(EncoderConfig{});
  Model init = init_model(EncoderConfig{}, ModelDims{128, 16, 8, 8, 10}, PairScope::kParagraph, {}, 4);
  auto a = finetune(std::span(f.train).first(48), init, hp(2, 1e-3, 9), enc);
  auto b = finetune(std::span(f.train).first(48), init, hp(2, 1e-3, 9), enc);
  EXPECT_EQ(a.log.final_loss(), b.log.final_loss());
  EXPECT_EQ(a.model.agg.out_w, b.model.agg.out_w);
}

TEST(Finetune, WarmupTrace) {
  const auto& f = synthetic();
  ToyEncoder enc(EncoderConfig{});
  Model init = init_model(EncoderConfig{}, ModelDims{128, 8, 4, 4, 3}, PairScope::kParagraph, {}, 4);
  auto r = finetune(std::span(f.train).first(32), init, hp(5, 1e-3), enc);  // 10 steps, 1 warm-up step
  ASSERT_EQ(r.log.lr_trace.size(), 10u);
  for (double lr : r.log.lr_trace) EXPECT_DOUBLE_EQ(lr, 1e-3);
  auto r2 = finetune(std::span(f.train).first(160), init, hp(2, 1e-3), enc);  // 20 steps, 2 warm-up steps
  EXPECT_DOUBLE_EQ(r2.log.lr_trace[0], 5e-4);
  EXPECT_DOUBLE_EQ(r2.log.lr_trace[1], 1e-3);
}

TEST(Finetune, SingleClassRejected) {
  std::vector<Article> pos = {testing::sized_article({2}, 1, 1), testing::sized_article({2}, 2, 1)};
  ToyEncoder enc(EncoderConfig{});
  EXPECT_THROW(finetune(pos, init_model(EncoderConfig{}, ModelDims{}, PairScope::kParagraph, {}, 1), hp(1, 1e-3), enc),
               SingleClassError);
}

TEST(Pipeline, FactoryTrainsFromSharedPretrainedWeights) {
  ExperimentConfig cfg;
  cfg.dims = {128, 16, 8, 8, 5};
  cfg.finetune = hp(1, 1e-3);
  auto factory = pcnn_factory(cfg, std::nullopt);
  auto clf = factory(std::span(synthetic().train).first(32), 3);
  double p = clf->predict_prob(synthetic().test[0]);
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
}

}  // namespace
}  // namespace pcnn
