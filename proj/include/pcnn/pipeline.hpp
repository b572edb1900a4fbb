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

// Pre-train -> fine-tune -> evaluate wiring shared by the CLI, the protocol
// runner and the acceptance suite.

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <utility>

#include "pcnn/aggregator.hpp"
#include "pcnn/config.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/pcl.hpp"
#include "pcnn/protocol.hpp"
#include "pcnn/trainer.hpp"

namespace pcnn {

/// PCL parameters pre-trained on NLI pairs, or nullopt when pre-training is
/// disabled, ablated away, or there is no data.
inline std::optional<PretrainResult> pretrain_stage(const ExperimentConfig& cfg, std::span<const NLIExample> nli,
                                                    SentenceEncoder& encoder) {
  if (!cfg.pretrain_enabled || cfg.ablation.no_pcl || nli.empty()) return std::nullopt;
  auto init = init_pcl(cfg.dims.d_s, cfg.dims.d_t, derive_seed(cfg.stage_seed("init"), "init/pcl"));
  return pretrain(nli, encoder, init, cfg.pretrain_hp());
}

/// Fresh model for `cfg`, with pre-trained PCL weights dropped in when given.
inline Model initial_model(const ExperimentConfig& cfg, const PclParams* pretrained, std::uint64_t seed) {
  Model m = init_model(cfg.encoder, cfg.dims, cfg.scope, cfg.ablation, derive_seed(seed, "init"));
  m.threshold = cfg.threshold;
  if (pretrained && !cfg.ablation.no_pcl) {
    if (pretrained->transform.rows() != m.pcl.transform.rows() || pretrained->transform.cols() != m.pcl.transform.cols())
      throw ConfigError("pre-trained PCL shape does not match model dims");
    m.pcl = *pretrained;
  }
  return m;
}

inline FinetuneResult train_model(std::span<const Article> train, const ExperimentConfig& cfg,
                                  const PclParams* pretrained, SentenceEncoder& encoder, std::uint64_t seed) {
  Hyperparams hp = cfg.finetune;
  hp.seed = derive_seed(seed, "finetune");
  return finetune(train, initial_model(cfg, pretrained, seed), hp, encoder);
}

class PcnnClassifier final : public ArticleClassifier {
 public:
  PcnnClassifier(Model model, std::shared_ptr<const SentenceEncoder> encoder)
      : model_(std::move(model)), encoder_(std::move(encoder)) {}
  double predict_prob(const Article& a) const override { return predict(a, model_, *encoder_).prob; }
  const Model& model() const { return model_; }

 private:
  Model model_;
  std::shared_ptr<const SentenceEncoder> encoder_;
};

/// Factory for run_protocol: each call fine-tunes a fresh model on the
/// training partition, starting from the shared pre-trained PCL weights.
inline ModelFactory pcnn_factory(ExperimentConfig cfg, std::optional<PclParams> pretrained) {
  if (cfg.encoder.kind != EncoderKind::kToy && !cfg.ablation.no_sbert)
    throw CapabilityError("the protocol runner builds its own encoders and supports only the toy encoder");
  auto shared = std::make_shared<std::optional<PclParams>>(std::move(pretrained));
  return [cfg, shared](std::span<const Article> train, std::uint64_t seed) -> std::unique_ptr<ArticleClassifier> {
    auto encoder = std::shared_ptr<SentenceEncoder>(make_encoder(cfg.encoder));
    auto result = train_model(train, cfg, shared->has_value() ? &**shared : nullptr, *encoder, seed);
    return std::make_unique<PcnnClassifier>(std::move(result.model), encoder);
  };
}

}  // namespace pcnn
