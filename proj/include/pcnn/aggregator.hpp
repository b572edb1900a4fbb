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

// Article-level model. Pairs are ranked by contradiction probability, the top
// K pair features are pooled with scalar self-attention
//
//   e_k = <Q c_k, K c_k>,  alpha = softmax(e),  a = sum_k alpha_k V c_k / K_eff
//
// and a one-hidden-layer ReLU network with a sigmoid output classifies a.
// Selection is a hard choice; gradients flow only through the selected pairs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcnn/common.hpp"
#include "pcnn/corpus.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/pcl.hpp"

namespace pcnn {

struct AggParams {
  Eigen::MatrixXd query;     // d_a x pair_dim
  Eigen::MatrixXd key;       // d_a x pair_dim
  Eigen::MatrixXd value;     // d_a x pair_dim
  Eigen::MatrixXd hidden_w;  // h x input_dim (input_dim = d_a, or K * pair_dim without attention)
  Eigen::VectorXd hidden_b;  // h
  Eigen::VectorXd out_w;     // h
  Eigen::VectorXd out_b;     // 1

  ParamList params() {
    auto ref = [](const char* name, auto& m) {
      return ParamRef{name, {m.data(), static_cast<std::size_t>(m.size())}, m.rows(), m.cols()};
    };
    return {ref("agg.query", query),       ref("agg.key", key),         ref("agg.value", value),
            ref("agg.hidden_w", hidden_w), ref("agg.hidden_b", hidden_b), ref("agg.out_w", out_w),
            ref("agg.out_b", out_b)};
  }

  static AggParams zeros(int pair_dim, int d_a, int hidden, int input_dim) {
    return {Eigen::MatrixXd::Zero(d_a, pair_dim), Eigen::MatrixXd::Zero(d_a, pair_dim),
            Eigen::MatrixXd::Zero(d_a, pair_dim), Eigen::MatrixXd::Zero(hidden, input_dim),
            Eigen::VectorXd::Zero(hidden),        Eigen::VectorXd::Zero(hidden),
            Eigen::VectorXd::Zero(1)};
  }
};

struct AblationFlags {
  bool no_sa = false;          // K fixed slots of pair features replace attention
  bool no_pcl = false;         // (t_i | t_j) features, uniform selection scores, no pre-training
  bool no_sbert = false;       // force the built-in toy encoder
  bool no_top_pair = false;    // pool every pair instead of the top K
  bool no_paragraph = false;   // article-scope pair enumeration

  void validate() const {
    if (no_top_pair && no_sa)
      throw ConfigError("ablation flags no_top_pair and no_sa cannot be combined");
  }
  bool any() const { return no_sa || no_pcl || no_sbert || no_top_pair || no_paragraph; }

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct ModelDims {
  int d_s = 128;
  int d_t = 128;
  int d_a = 64;
  int hidden = 64;
  int k = 10;

  void validate() const {
    if (d_s < 2 || d_t < 1 || d_a < 1 || hidden < 1) throw ConfigError("model dimensions must be positive (d_s >= 2)");
    if (k <= 0) throw ConfigError("model.k must be positive");
  }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Full parameter set plus the structural settings needed to run it.
struct Model {
  EncoderConfig encoder;
  ModelDims dims;
  PairScope scope = PairScope::kParagraph;
  AblationFlags ablation;
  double threshold = 0.5;
  PclParams pcl;
  AggParams agg;

  int pair_dim() const { return (ablation.no_pcl ? 2 : 3) * dims.d_t; }
  int classifier_input_dim() const { return ablation.no_sa ? dims.k * pair_dim() : dims.d_a; }
  PairScope effective_scope() const { return ablation.no_paragraph ? PairScope::kArticle : scope; }

  ParamList params() {
    auto out = pcl.params();
    auto a = agg.params();
    out.insert(out.end(), a.begin(), a.end());
    return out;
  }

  /// Same shapes, all zeros.
  Model zeros_like() const {
    Model m = *this;
    m.pcl = PclParams::zeros(dims.d_s, dims.d_t, static_cast<int>(pcl.readout.cols()));
    m.agg = AggParams::zeros(pair_dim(), dims.d_a, dims.hidden, classifier_input_dim());
    return m;
  }
};

inline AggParams init_agg(int pair_dim, int d_a, int hidden, int input_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto p = AggParams::zeros(pair_dim, d_a, hidden, input_dim);
  glorot_init(p.query, rng);
  glorot_init(p.key, rng);
  glorot_init(p.value, rng);
  glorot_init(p.hidden_w, rng);
  // Small positive bias keeps ReLU units off the kink for pair-less articles.
  p.hidden_b.setConstant(0.01);
  Eigen::MatrixXd out(p.out_w.size(), 1);
  glorot_init(out, rng);
  p.out_w = out.col(0);
  return p;
}

/// Fresh Glorot-initialized model; the seed fans out to the PCL and aggregator blocks.
inline Model init_model(const EncoderConfig& encoder, const ModelDims& dims, PairScope scope,
                        const AblationFlags& ablation, std::uint64_t seed) {
  encoder.validate();
  dims.validate();
  ablation.validate();
  if (encoder.d_s != dims.d_s) throw ConfigError("encoder.d_s and model.d_s disagree");
  Model m{encoder, dims, scope, ablation, 0.5, {}, {}};
  if (ablation.no_sbert) m.encoder.kind = EncoderKind::kToy;
  m.pcl = init_pcl(dims.d_s, dims.d_t, derive_seed(seed, "init/pcl"), !ablation.no_pcl);
  m.agg = init_agg(m.pair_dim(), dims.d_a, dims.hidden, m.classifier_input_dim(), derive_seed(seed, "init/agg"));
  return m;
}

/// Re-shapes a model for an ablation. Blocks whose shape changes are
/// re-initialized from `seed`; under no_pcl the transform is re-initialized as
/// well because that variant is trained without pre-training.
inline Model apply_ablation(const AblationFlags& flags, const Model& model, std::uint64_t seed) {
  flags.validate();
  Model m = model;
  m.ablation = flags;
  if (flags.no_sbert) m.encoder.kind = EncoderKind::kToy;
  if (flags.no_pcl != model.ablation.no_pcl) {
    m.pcl = init_pcl(m.dims.d_s, m.dims.d_t, derive_seed(seed, "ablation/pcl"), !flags.no_pcl);
  }
  if (m.pair_dim() != model.pair_dim() || m.classifier_input_dim() != model.classifier_input_dim()) {
    m.agg = init_agg(m.pair_dim(), m.dims.d_a, m.dims.hidden, m.classifier_input_dim(),
                     derive_seed(seed, "ablation/agg"));
  }
  return m;
}

namespace detail {

/// Rank order: probability descending, then pair id ascending.
inline std::vector<std::size_t> rank_order(std::span<const double> probs, std::span<const PairId> ids,
                                           std::size_t limit) {
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  limit = std::min(limit, idx.size());
  auto before = [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return ids[a] < ids[b];
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(limit), idx.end(), before);
  idx.resize(limit);
  return idx;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace detail

/// The K highest-probability pairs, probability descending; ties go to the
/// lexicographically smaller pair id. Fewer than K inputs returns them all.
inline std::vector<PairScore> select_topk(std::span<const PairScore> scores, int k) {
  if (k <= 0) throw InvalidArgument("select_topk: K must be positive");
  std::vector<double> probs;
  std::vector<PairId> ids;
  for (const auto& s : scores) {
    probs.push_back(s.prob);
    ids.push_back(s.pair);
  }
  std::vector<PairScore> out;
  for (auto i : detail::rank_order(probs, ids, static_cast<std::size_t>(k))) out.push_back(scores[i]);
  return out;
}

struct Attention {
  Eigen::VectorXd article;  // d_a
  Eigen::VectorXd alpha;    // K_eff, sums to 1
  Eigen::VectorXd scores;   // e_k
  Eigen::MatrixXd queries, keys, values;  // d_a x K_eff
};

/// `features` holds one pair feature vector per column.
inline Attention attend_columns(const Eigen::MatrixXd& features, const AggParams& params) {
  if (features.cols() == 0) throw InvalidArgument("attend: no pair features");
  if (features.rows() != params.query.cols())
    throw DimensionError("attend: pair feature dimension " + std::to_string(features.rows()) +
                         " does not match " + std::to_string(params.query.cols()));
  Attention at;
  at.queries = params.query * features;
  at.keys = params.key * features;
  at.values = params.value * features;
  at.scores = (at.queries.array() * at.keys.array()).colwise().sum().transpose();
  if (!at.scores.allFinite()) throw NonFiniteError("attend: non-finite attention scores");
  Eigen::ArrayXd e = (at.scores.array() - at.scores.maxCoeff()).exp();
  at.alpha = (e / e.sum()).matrix();
  at.article = at.values * at.alpha / static_cast<double>(features.cols());
  return at;
}

inline Eigen::VectorXd attend(std::span<const PairScore> topk, const AggParams& params) {
  if (topk.empty()) throw InvalidArgument("attend: no pair features");
  Eigen::MatrixXd f(topk.front().features.size(), static_cast<Eigen::Index>(topk.size()));
  for (std::size_t k = 0; k < topk.size(); ++k) f.col(static_cast<Eigen::Index>(k)) = topk[k].features;
  return attend_columns(f, params).article;
}

struct Prediction {
  double prob = 0.5;
  int label = 1;
  double logit = 0.0;
  std::vector<PairScore> explanation;  // every scored pair, most contradictory first
  int pooled = 0;                      // number of pairs fed to the classifier
};

struct ClassifierTrace {
  Eigen::VectorXd pre;
  Eigen::VectorXd hidden;
  double logit = 0.0;
  double prob = 0.5;
};

inline ClassifierTrace classify_trace(const Eigen::VectorXd& input, const AggParams& params) {
  if (input.size() != params.hidden_w.cols())
    throw DimensionError("classify: input dimension " + std::to_string(input.size()) + " does not match " +
                         std::to_string(params.hidden_w.cols()));
  ClassifierTrace tr;
  tr.pre = params.hidden_w * input + params.hidden_b;
  tr.hidden = tr.pre.cwiseMax(0.0);
  tr.logit = params.out_w.dot(tr.hidden) + params.out_b[0];
  if (!std::isfinite(tr.logit)) throw NonFiniteError("classify: non-finite activation");
  tr.prob = detail::sigmoid(tr.logit);
  return tr;
}

/// Label 1 iff prob >= threshold.
inline Prediction classify(const Eigen::VectorXd& article, const AggParams& params, double threshold = 0.5) {
  auto tr = classify_trace(article, params);
  Prediction p;
  p.prob = tr.prob;
  p.logit = tr.logit;
  p.label = tr.prob >= threshold ? 1 : 0;
  return p;
}

/// Every intermediate of one article's forward pass, kept for backprop.
struct ArticleForward {
  std::vector<std::pair<int, int>> pairs;
  std::vector<PairId> ids;
  Eigen::MatrixXd transformed;     // d_t x n
  Eigen::MatrixXd features;        // pair_dim x P
  std::vector<double> probs;       // P
  std::vector<std::size_t> ranked; // all pair indices in explanation order
  std::vector<std::size_t> pooled; // indices fed to the classifier
  Attention attention;
  Eigen::VectorXd input;
  ClassifierTrace classifier;
};

/// `embeddings` holds one sentence embedding per row, in article order.
inline ArticleForward forward(const Model& model, const Article& article, const Eigen::MatrixXd& embeddings) {
  if (embeddings.cols() != model.dims.d_s)
    throw DimensionError("forward: embedding width " + std::to_string(embeddings.cols()) + " != d_s " +
                         std::to_string(model.dims.d_s));
  ArticleForward f;
  const bool with_diff = !model.ablation.no_pcl;
  const auto sentences = article.sentences();
  f.pairs = pair_indices(article, model.effective_scope());
  f.transformed = model.pcl.transform * embeddings.transpose();
  const auto n_pairs = static_cast<Eigen::Index>(f.pairs.size());
  f.features.resize(model.pair_dim(), n_pairs);
  f.probs.resize(f.pairs.size());
  f.ids.reserve(f.pairs.size());
  for (Eigen::Index p = 0; p < n_pairs; ++p) {
    auto [i, j] = f.pairs[static_cast<std::size_t>(p)];
    f.ids.push_back(make_pair_id(sentences[i], sentences[j]));
    f.features.col(p) = pair_features_from_transformed(f.transformed.col(i), f.transformed.col(j), with_diff);
    f.probs[static_cast<std::size_t>(p)] =
        with_diff ? contradiction_prob(f.features.col(p), model.pcl) : 0.5;
  }
  f.ranked = detail::rank_order(f.probs, f.ids, f.pairs.size());
  const std::size_t pool =
      model.ablation.no_top_pair ? f.ranked.size() : std::min<std::size_t>(f.ranked.size(), model.dims.k);
  f.pooled.assign(f.ranked.begin(), f.ranked.begin() + static_cast<std::ptrdiff_t>(pool));

  if (model.ablation.no_sa) {
    f.input = Eigen::VectorXd::Zero(model.classifier_input_dim());
    const int dim = model.pair_dim();
    for (std::size_t k = 0; k < f.pooled.size(); ++k)
      f.input.segment(static_cast<Eigen::Index>(k) * dim, dim) = f.features.col(static_cast<Eigen::Index>(f.pooled[k]));
  } else if (f.pooled.empty()) {
    f.input = Eigen::VectorXd::Zero(model.dims.d_a);
  } else {
    Eigen::MatrixXd selected(model.pair_dim(), static_cast<Eigen::Index>(f.pooled.size()));
    for (std::size_t k = 0; k < f.pooled.size(); ++k)
      selected.col(static_cast<Eigen::Index>(k)) = f.features.col(static_cast<Eigen::Index>(f.pooled[k]));
    f.attention = attend_columns(selected, model.agg);
    f.input = f.attention.article;
  }
  f.classifier = classify_trace(f.input, model.agg);
  return f;
}

/// Backpropagates d(loss)/d(logit) through one forward pass, accumulating into
/// `grads`. When `d_embeddings` is non-null it receives d(loss)/d(embedding)
/// (one row per sentence).
inline void backward(const Model& model, const ArticleForward& f, const Eigen::MatrixXd& embeddings,
                     double dlogit, Model& grads, Eigen::MatrixXd* d_embeddings = nullptr) {
  const auto& agg = model.agg;
  auto& g = grads.agg;
  const auto& tr = f.classifier;

  g.out_w += dlogit * tr.hidden;
  g.out_b[0] += dlogit;
  const Eigen::VectorXd dpre = (dlogit * agg.out_w).cwiseProduct((tr.pre.array() > 0.0).cast<double>().matrix());
  g.hidden_w.noalias() += dpre * f.input.transpose();
  g.hidden_b += dpre;
  const Eigen::VectorXd dinput = agg.hidden_w.transpose() * dpre;

  const int dim = model.pair_dim();
  const auto n_pooled = static_cast<Eigen::Index>(f.pooled.size());
  Eigen::MatrixXd dfeatures = Eigen::MatrixXd::Zero(dim, n_pooled);
  if (model.ablation.no_sa) {
    for (Eigen::Index k = 0; k < n_pooled; ++k) dfeatures.col(k) = dinput.segment(k * dim, dim);
  } else if (n_pooled > 0) {
    const auto& at = f.attention;
    const double inv_k = 1.0 / static_cast<double>(n_pooled);
    Eigen::MatrixXd selected(dim, n_pooled);
    for (Eigen::Index k = 0; k < n_pooled; ++k) selected.col(k) = f.features.col(static_cast<Eigen::Index>(f.pooled[k]));
    // a = V C alpha / K
    const Eigen::MatrixXd dvalues = dinput * at.alpha.transpose() * inv_k;         // d_a x K
    const Eigen::VectorXd dalpha = at.values.transpose() * dinput * inv_k;         // K
    const Eigen::VectorXd dscores = at.alpha.cwiseProduct(dalpha.array().matrix() -
                                                          Eigen::VectorXd::Constant(n_pooled, at.alpha.dot(dalpha)));
    const Eigen::MatrixXd dqueries = at.keys * dscores.asDiagonal();
    const Eigen::MatrixXd dkeys = at.queries * dscores.asDiagonal();
    g.query.noalias() += dqueries * selected.transpose();
    g.key.noalias() += dkeys * selected.transpose();
    g.value.noalias() += dvalues * selected.transpose();
    dfeatures = agg.query.transpose() * dqueries + agg.key.transpose() * dkeys + agg.value.transpose() * dvalues;
  }

  // Pair features -> transformed sentences -> transform matrix.
  const int d_t = model.dims.d_t;
  Eigen::MatrixXd dtransformed = Eigen::MatrixXd::Zero(d_t, f.transformed.cols());
  for (Eigen::Index k = 0; k < n_pooled; ++k) {
    auto [i, j] = f.pairs[f.pooled[static_cast<std::size_t>(k)]];
    auto dc = dfeatures.col(k);
    dtransformed.col(i) += dc.segment(0, d_t);
    dtransformed.col(j) += dc.segment(d_t, d_t);
    if (!model.ablation.no_pcl) {
      const Eigen::VectorXd sign = (f.transformed.col(i) - f.transformed.col(j)).array().sign().matrix();
      const Eigen::VectorXd dd = sign.cwiseProduct(dc.segment(2 * d_t, d_t));
      dtransformed.col(i) += dd;
      dtransformed.col(j) -= dd;
    }
  }
  grads.pcl.transform.noalias() += dtransformed * embeddings;
  if (d_embeddings) *d_embeddings = dtransformed.transpose() * model.pcl.transform;
}

/// Binary cross-entropy on the logit.
inline double article_loss(double logit, int label) {
  return detail::softplus(logit) - static_cast<double>(label) * logit;
}

inline std::vector<std::string> sentence_texts(const Article& article) {
  std::vector<std::string> texts;
  for (const auto& p : article.paragraphs)
    for (const auto& s : p) texts.push_back(s.text);
  return texts;
}

/// Full pipeline: encode, enumerate, score, select, attend, classify. The
/// explanation ranks every scored pair, not only the pooled ones. Articles
/// without a candidate pair are classified from the zero article vector.
inline Prediction predict(const Article& article, const Model& model, const SentenceEncoder& encoder) {
  const auto texts = sentence_texts(article);
  const Eigen::MatrixXd emb = encoder.embed(texts);
  const auto f = forward(model, article, emb);
  Prediction pred;
  pred.prob = f.classifier.prob;
  pred.logit = f.classifier.logit;
  pred.label = pred.prob >= model.threshold ? 1 : 0;
  pred.pooled = static_cast<int>(f.pooled.size());
  pred.explanation.reserve(f.ranked.size());
  for (auto idx : f.ranked)
    pred.explanation.push_back({f.ids[idx], f.features.col(static_cast<Eigen::Index>(idx)), f.probs[idx]});
  return pred;
}

}  // namespace pcnn
