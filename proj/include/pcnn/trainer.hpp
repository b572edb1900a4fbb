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

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcnn/aggregator.hpp"
#include "pcnn/common.hpp"
#include "pcnn/corpus.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/optim.hpp"

namespace pcnn {

struct FinetuneResult {
  Model model;
  TrainLog log;
};

/// Mean article loss and its gradient for a set of articles. `embeddings[i]`
/// must hold the sentence embeddings of `articles[i]`.
inline double batch_loss_and_grad(const Model& model, std::span<const Article> articles,
                                  std::span<const Eigen::MatrixXd> embeddings, Model& grads,
                                  std::vector<Eigen::MatrixXd>* d_embeddings = nullptr) {
  const double scale = 1.0 / static_cast<double>(articles.size());
  double loss = 0.0;
  if (d_embeddings) d_embeddings->assign(articles.size(), {});
  for (std::size_t i = 0; i < articles.size(); ++i) {
    const auto f = forward(model, articles[i], embeddings[i]);
    loss += article_loss(f.classifier.logit, articles[i].label);
    const double dlogit = (f.classifier.prob - static_cast<double>(articles[i].label)) * scale;
    backward(model, f, embeddings[i], dlogit, grads, d_embeddings ? &(*d_embeddings)[i] : nullptr);
  }
  return loss * scale;
}

/// End-to-end fine-tuning on labeled articles: Adam on the mean article
/// cross-entropy with linear warm-up then a constant rate. Embeddings of a
/// frozen encoder are computed once; a trainable encoder is re-run per batch
/// and updated with the rest of the model.
inline FinetuneResult finetune(std::span<const Article> train, const Model& init, const Hyperparams& hp,
                               SentenceEncoder& encoder) {
  hp.validate();
  std::size_t n_pos = 0;
  for (const auto& a : train) n_pos += a.label == 1;
  if (n_pos == 0 || n_pos == train.size())
    throw SingleClassError("finetune needs articles of both labels (got " + std::to_string(n_pos) +
                           " positive of " + std::to_string(train.size()) + ")");

  FinetuneResult result{init, {}};
  Model& model = result.model;
  Model grads = model.zeros_like();
  const bool encoder_trainable = encoder.trainable();

  std::vector<Eigen::MatrixXd> cached;
  if (!encoder_trainable) {
    cached.reserve(train.size());
    for (const auto& a : train) cached.push_back(encoder.embed(sentence_texts(a)));
  }

  const std::size_t n = train.size();
  const auto bs = static_cast<std::size_t>(hp.batch_size);
  const std::size_t batches_per_epoch = (n + bs - 1) / bs;
  WarmupSchedule schedule(hp.learning_rate, hp.warmup_fraction, batches_per_epoch * hp.epochs);
  Adam adam;
  std::mt19937_64 rng(hp.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<Article> batch;
  std::vector<Eigen::MatrixXd> batch_emb;
  std::vector<Eigen::MatrixXd> d_emb;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t lo = b * bs;
      const std::size_t hi = std::min(n, lo + bs);
      batch.clear();
      batch_emb.clear();
      for (std::size_t k = lo; k < hi; ++k) {
        batch.push_back(train[order[k]]);
        batch_emb.push_back(encoder_trainable ? encoder.embed(sentence_texts(train[order[k]])) : cached[order[k]]);
      }
      for (auto& p : grads.params()) std::fill(p.values.begin(), p.values.end(), 0.0);
      if (encoder_trainable) encoder.zero_grad();
      const double loss =
          batch_loss_and_grad(model, batch, batch_emb, grads, encoder_trainable ? &d_emb : nullptr);
      if (!std::isfinite(loss)) throw NonFiniteError("finetune: non-finite loss at step " +
                                                     std::to_string(result.log.steps + 1));
      auto plist = model.params();
      auto glist = grads.params();
      if (encoder_trainable) {
        for (std::size_t i = 0; i < batch.size(); ++i) encoder.accumulate_gradient(sentence_texts(batch[i]), d_emb[i]);
        auto ep = encoder.trainable_params();
        auto eg = encoder.trainable_grads();
        plist.insert(plist.end(), ep.begin(), ep.end());
        glist.insert(glist.end(), eg.begin(), eg.end());
      }
      const std::size_t step = result.log.steps + 1;
      const double lr = schedule.lr(step);
      adam.step(plist, glist, lr);
      result.log.steps = step;
      result.log.lr_trace.push_back(lr);
      result.log.step_loss.push_back(loss);
      epoch_loss += loss * static_cast<double>(hi - lo);
    }
    result.log.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

/// Fraction of articles whose predicted label matches the gold label.
inline double accuracy(std::span<const Article> articles, const Model& model, const SentenceEncoder& encoder) {
  if (articles.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& a : articles) correct += predict(a, model, encoder).label == a.label;
  return static_cast<double>(correct) / static_cast<double>(articles.size());
}

}  // namespace pcnn
