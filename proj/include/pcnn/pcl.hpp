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

// Pairwise contradiction learning: a shared linear sentence transform t = W s,
// pair features c = (t_i | t_j | |t_i - t_j|) and a two-way softmax readout
// whose second component is the contradiction probability.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcnn/common.hpp"
#include "pcnn/corpus.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/optim.hpp"

namespace pcnn {

struct PclParams {
  Eigen::MatrixXd transform;  // d_t x d_s, shared by both sentences
  Eigen::MatrixXd readout;    // 2 x pair_dim; row 1 is the contradiction class

  int d_t() const { return static_cast<int>(transform.rows()); }
  int d_s() const { return static_cast<int>(transform.cols()); }

  ParamList params() {
    return {{"pcl.transform", {transform.data(), static_cast<std::size_t>(transform.size())},
             transform.rows(), transform.cols()},
            {"pcl.readout", {readout.data(), static_cast<std::size_t>(readout.size())},
             readout.rows(), readout.cols()}};
  }

  static PclParams zeros(int d_s, int d_t, int pair_dim) {
    return {Eigen::MatrixXd::Zero(d_t, d_s), Eigen::MatrixXd::Zero(2, pair_dim)};
  }
};

enum class PairScope { kParagraph, kArticle };

inline std::string to_string(PairScope s) { return s == PairScope::kParagraph ? "paragraph" : "article"; }

inline PairScope pair_scope_from_string(std::string_view s) {
  if (s == "paragraph") return PairScope::kParagraph;
  if (s == "article") return PairScope::kArticle;
  throw ConfigError("unknown pair scope '" + std::string(s) + "'");
}

/// ((para_i, sent_i), (para_j, sent_j)), ordered lexicographically.
struct PairId {
  int para_i = 0;
  int sent_i = 0;
  int para_j = 0;
  int sent_j = 0;

  friend auto operator<=>(const PairId&, const PairId&) = default;
};

struct PairScore {
  PairId pair;
  Eigen::VectorXd features;
  double prob = 0.0;
};

/// Fills an Eigen matrix with Glorot-uniform entries.
inline void glorot_init(Eigen::MatrixXd& m, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
}

inline PclParams init_pcl(int d_s, int d_t, std::uint64_t seed, bool with_difference = true) {
  std::mt19937_64 rng(seed);
  auto p = PclParams::zeros(d_s, d_t, (with_difference ? 3 : 2) * d_t);
  glorot_init(p.transform, rng);
  glorot_init(p.readout, rng);
  return p;
}

/// Pair features from already-transformed sentences. Without the difference
/// block the result is the plain concatenation (t_i | t_j).
inline Eigen::VectorXd pair_features_from_transformed(const Eigen::Ref<const Eigen::VectorXd>& t_i,
                                                      const Eigen::Ref<const Eigen::VectorXd>& t_j,
                                                      bool with_difference = true) {
  const auto d = t_i.size();
  Eigen::VectorXd c((with_difference ? 3 : 2) * d);
  c.segment(0, d) = t_i;
  c.segment(d, d) = t_j;
  if (with_difference) c.segment(2 * d, d) = (t_i - t_j).cwiseAbs();
  return c;
}

inline Eigen::VectorXd pair_features(const Eigen::VectorXd& s_i, const Eigen::VectorXd& s_j,
                                     const PclParams& params, bool with_difference = true) {
  if (s_i.size() != params.d_s() || s_j.size() != params.d_s())
    throw DimensionError("pair_features: embedding dimension " + std::to_string(s_i.size()) + "/" +
                         std::to_string(s_j.size()) + " does not match d_s " + std::to_string(params.d_s()));
  return pair_features_from_transformed(params.transform * s_i, params.transform * s_j, with_difference);
}

/// Numerically stable two-way softmax.
inline Eigen::Vector2d softmax2(const Eigen::Vector2d& z) {
  if (!z.allFinite()) throw NonFiniteError("softmax: non-finite logits");
  double m = z.maxCoeff();
  Eigen::Vector2d e((z.array() - m).exp());
  return e / e.sum();
}

inline Eigen::Vector2d class_probs(const Eigen::VectorXd& c, const PclParams& params) {
  if (c.size() != params.readout.cols())
    throw DimensionError("contradiction_prob: feature dimension " + std::to_string(c.size()) +
                         " does not match readout width " + std::to_string(params.readout.cols()));
  return softmax2(params.readout * c);
}

inline double contradiction_prob(const Eigen::VectorXd& c, const PclParams& params) {
  return class_probs(c, params)[1];
}

/// Flattened sentence indices of every candidate pair, i before j, in
/// lexicographic pair-id order.
inline std::vector<std::pair<int, int>> pair_indices(const Article& article, PairScope scope) {
  std::vector<std::pair<int, int>> out;
  if (scope == PairScope::kArticle) {
    const int n = static_cast<int>(article.sentence_count());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
  }
  int offset = 0;
  for (const auto& para : article.paragraphs) {
    const int n = static_cast<int>(para.size());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) out.emplace_back(offset + i, offset + j);
    offset += n;
  }
  return out;
}

inline std::vector<std::pair<Sentence, Sentence>> enumerate_pairs(const Article& article, PairScope scope) {
  auto sentences = article.sentences();
  std::vector<std::pair<Sentence, Sentence>> out;
  for (auto [i, j] : pair_indices(article, scope)) out.emplace_back(sentences[i], sentences[j]);
  return out;
}

inline PairId make_pair_id(const Sentence& a, const Sentence& b) {
  return {a.para_idx, a.sent_id, b.para_idx, b.sent_id};
}

/// Cross-entropy of one NLI pair with gradients accumulated into `grads`
/// (same shapes as `params`). Returns the loss. `ds_i`/`ds_j` receive the
/// gradient with respect to the sentence embeddings when non-null.
inline double pcl_loss_and_grad(const Eigen::VectorXd& s_i, const Eigen::VectorXd& s_j, int label,
                                const PclParams& params, PclParams& grads,
                                Eigen::VectorXd* ds_i = nullptr, Eigen::VectorXd* ds_j = nullptr) {
  const Eigen::VectorXd t_i = params.transform * s_i;
  const Eigen::VectorXd t_j = params.transform * s_j;
  const Eigen::VectorXd c = pair_features_from_transformed(t_i, t_j);
  const Eigen::Vector2d z = params.readout * c;
  const Eigen::Vector2d q = softmax2(z);
  const double loss = -std::log(std::max(q[label], 1e-300));

  Eigen::Vector2d dz = q;
  dz[label] -= 1.0;
  grads.readout.noalias() += dz * c.transpose();
  const Eigen::VectorXd dc = params.readout.transpose() * dz;
  const auto d = t_i.size();
  const Eigen::VectorXd sign = (t_i - t_j).array().sign().matrix();
  const Eigen::VectorXd diff_grad = sign.cwiseProduct(dc.segment(2 * d, d));
  const Eigen::VectorXd dt_i = dc.segment(0, d) + diff_grad;
  const Eigen::VectorXd dt_j = dc.segment(d, d) - diff_grad;
  grads.transform.noalias() += dt_i * s_i.transpose() + dt_j * s_j.transpose();
  if (ds_i) *ds_i = params.transform.transpose() * dt_i;
  if (ds_j) *ds_j = params.transform.transpose() * dt_j;
  return loss;
}

struct PretrainOptions {
  /// Keep the readout fixed (its gradient is discarded).
  bool freeze_readout = false;
};

struct PretrainResult {
  PclParams params;
  TrainLog log;
};

namespace detail {

/// Embeddings for a list of texts, memoized when the encoder is frozen.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(SentenceEncoder& encoder) : encoder_(encoder), frozen_(!encoder.trainable()) {}

  Eigen::VectorXd get(const std::string& text) {
    if (!frozen_) return encoder_.embed(std::span<const std::string>(&text, 1)).row(0).transpose();
    auto it = cache_.find(text);
    if (it != cache_.end()) return it->second;
    Eigen::VectorXd v = encoder_.embed(std::span<const std::string>(&text, 1)).row(0).transpose();
    cache_.emplace(text, v);
    return v;
  }

  bool frozen() const { return frozen_; }

 private:
  SentenceEncoder& encoder_;
  bool frozen_;
  std::map<std::string, Eigen::VectorXd, std::less<>> cache_;
};

}  // namespace detail

/// Binary cross-entropy pre-training on NLI pairs with Adam and linear warm-up.
/// Mini-batches are drawn from a per-epoch shuffle seeded by hp.seed. A
/// trainable encoder is updated together with the PCL parameters.
inline PretrainResult pretrain(std::span<const NLIExample> examples, SentenceEncoder& encoder,
                               const PclParams& init, const Hyperparams& hp, PretrainOptions options = {}) {
  hp.validate();
  std::size_t n_pos = 0;
  for (const auto& e : examples) n_pos += e.label == 1;
  if (n_pos == 0 || n_pos == examples.size())
    throw SingleClassError("pretrain needs at least one example of each class");
  if (init.readout.cols() != 3 * init.d_t())
    throw DimensionError("pretrain: readout must have 3*d_t columns");

  PretrainResult result{init, {}};
  PclParams& params = result.params;
  PclParams grads = PclParams::zeros(params.d_s(), params.d_t(), static_cast<int>(params.readout.cols()));
  detail::EmbeddingCache cache(encoder);
  const bool encoder_trainable = !cache.frozen();

  const std::size_t n = examples.size();
  const std::size_t batches_per_epoch = (n + static_cast<std::size_t>(hp.batch_size) - 1) / hp.batch_size;
  WarmupSchedule schedule(hp.learning_rate, hp.warmup_fraction, batches_per_epoch * hp.epochs);
  Adam adam;
  std::mt19937_64 rng(hp.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t lo = b * hp.batch_size;
      const std::size_t hi = std::min(n, lo + hp.batch_size);
      const double scale = 1.0 / static_cast<double>(hi - lo);
      grads.transform.setZero();
      grads.readout.setZero();
      if (encoder_trainable) encoder.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        const auto& ex = examples[order[k]];
        Eigen::VectorXd s_i = cache.get(ex.premise);
        Eigen::VectorXd s_j = cache.get(ex.hypothesis);
        Eigen::VectorXd ds_i, ds_j;
        batch_loss += pcl_loss_and_grad(s_i, s_j, ex.label, params, grads, encoder_trainable ? &ds_i : nullptr,
                                        encoder_trainable ? &ds_j : nullptr);
        if (encoder_trainable) {
          std::string texts[2] = {ex.premise, ex.hypothesis};
          Eigen::MatrixXd g(2, ds_i.size());
          g.row(0) = ds_i.transpose() * scale;
          g.row(1) = ds_j.transpose() * scale;
          encoder.accumulate_gradient(texts, g);
        }
      }
      batch_loss *= scale;
      grads.transform *= scale;
      grads.readout *= scale;
      if (options.freeze_readout) grads.readout.setZero();
      if (!std::isfinite(batch_loss)) throw NonFiniteError("pretrain: non-finite loss");

      const std::size_t step = result.log.steps + 1;
      const double lr = schedule.lr(step);
      auto plist = params.params();
      auto glist = grads.params();
      if (options.freeze_readout) {
        plist.pop_back();
        glist.pop_back();
      }
      if (encoder_trainable) {
        auto ep = encoder.trainable_params();
        auto eg = encoder.trainable_grads();
        plist.insert(plist.end(), ep.begin(), ep.end());
        glist.insert(glist.end(), eg.begin(), eg.end());
      }
      adam.step(plist, glist, lr);
      result.log.steps = step;
      result.log.lr_trace.push_back(lr);
      result.log.step_loss.push_back(batch_loss);
      epoch_loss += batch_loss * static_cast<double>(hi - lo);
    }
    result.log.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

/// Accuracy of the PCL readout on NLI pairs (prediction = contradiction iff p >= 0.5).
inline double pcl_accuracy(std::span<const NLIExample> examples, SentenceEncoder& encoder,
                           const PclParams& params) {
  if (examples.empty()) return 0.0;
  detail::EmbeddingCache cache(encoder);
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    double p = contradiction_prob(pair_features(cache.get(ex.premise), cache.get(ex.hypothesis), params), params);
    correct += (p >= 0.5 ? 1 : 0) == ex.label;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace pcnn
