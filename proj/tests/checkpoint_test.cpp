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

#include <cstring>
#include <functional>

#include <nlohmann/json.hpp>

#include "pcnn/checkpoint.hpp"
#include "pcnn/trainer.hpp"
#include "test_util.hpp"

namespace pcnn {
namespace {

Model trained_small_model(const std::vector<Article>& corpus) {
  ToyEncoder enc(EncoderConfig{});
  Model m = init_model(EncoderConfig{}, ModelDims{128, 16, 8, 8, 4}, PairScope::kParagraph, {}, 11);
  Hyperparams hp;
  hp.epochs = 2;
  hp.learning_rate = 1e-3;
  return finetune(corpus, m, hp, enc).model;
}

const std::vector<Article>& corpus() {
  static const auto c = load_corpus(testing::data_path("synthetic_corpus.jsonl"));
  return c;
}

std::string rebuild_with_header(const std::string& bytes, const std::function<void(nlohmann::json&)>& edit) {
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  auto header = nlohmann::json::parse(bytes.substr(16, len));
  edit(header);
  std::string h = header.dump();
  std::string out = bytes.substr(0, 8);
  std::uint64_t n = h.size();
  out.append(reinterpret_cast<const char*>(&n), 8);
  return out + h + bytes.substr(16 + len);
}

TEST(Checkpoint, RoundTripIdenticalPredictions) {
  auto model = trained_small_model(corpus());
  auto dir = testing::scratch_dir("ckpt");
  CheckpointMeta meta;
  meta.steps = 20;
  meta.final_loss = 0.25;
  meta.extra = {{"stage", "test"}};
  save_checkpoint(model, dir / "m.ckpt", meta);
  auto loaded = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(loaded.meta.steps, 20u);
  EXPECT_EQ(loaded.meta.final_loss, 0.25);
  EXPECT_EQ(loaded.meta.extra["stage"], "test");
  EXPECT_EQ(loaded.model.dims, model.dims);
  ToyEncoder enc(EncoderConfig{});
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(predict(corpus()[i], loaded.model, enc).prob, predict(corpus()[i], model, enc).prob);
  EXPECT_EQ(checkpoint_bytes(loaded.model, loaded.meta), checkpoint_bytes(model, meta));
}

TEST(Checkpoint, AblatedShapesRoundTrip) {
  for (AblationFlags f : {AblationFlags{.no_sa = true}, AblationFlags{.no_pcl = true}}) {
    Model m = init_model(EncoderConfig{}, ModelDims{128, 8, 4, 4, 3}, PairScope::kArticle, f, 2);
    auto loaded = parse_checkpoint(checkpoint_bytes(m, {}));
    EXPECT_EQ(loaded.model.ablation, f);
    EXPECT_EQ(loaded.model.scope, PairScope::kArticle);
    EXPECT_EQ(loaded.model.agg.hidden_w, m.agg.hidden_w);
  }
}

TEST(Checkpoint, TruncatedIsCorrupt) {
  Model m = init_model(EncoderConfig{}, ModelDims{128, 8, 4, 4, 3}, PairScope::kParagraph, {}, 2);
  auto bytes = checkpoint_bytes(m, {});
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1})
    EXPECT_THROW(parse_checkpoint(bytes.substr(0, cut)), CorruptCheckpointError) << cut;
}

TEST(Checkpoint, FlippedPayloadByteFailsChecksum) {
  Model m = init_model(EncoderConfig{}, ModelDims{128, 8, 4, 4, 3}, PairScope::kParagraph, {}, 2);
  auto bytes = checkpoint_bytes(m, {});
  bytes[bytes.size() - 3] ^= 0x40;
  try {
    parse_checkpoint(bytes);
    FAIL();
  } catch (const CorruptCheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
}

TEST(Checkpoint, FutureVersionUnsupported) {
  Model m = init_model(EncoderConfig{}, ModelDims{128, 8, 4, 4, 3}, PairScope::kParagraph, {}, 2);
  auto bytes = rebuild_with_header(checkpoint_bytes(m, {}), [](nlohmann::json& h) { h["format_version"] = 2; });
  EXPECT_THROW(parse_checkpoint(bytes), UnsupportedVersionError);
}

TEST(Checkpoint, MissingFile) { EXPECT_THROW(load_checkpoint("/nonexistent/m.ckpt"), DataError); }

}  // namespace
}  // namespace pcnn
