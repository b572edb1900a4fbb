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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcnn/common.hpp"
#include "pcnn/corpus.hpp"

namespace pcnn {

enum class EncoderKind { kToy, kTransformerAdapter };

inline std::string to_string(EncoderKind k) {
  return k == EncoderKind::kToy ? "toy" : "transformer-adapter";
}

inline EncoderKind encoder_kind_from_string(std::string_view s) {
  if (s == "toy") return EncoderKind::kToy;
  if (s == "transformer-adapter") return EncoderKind::kTransformerAdapter;
  throw ConfigError("unknown encoder kind '" + std::string(s) + "'");
}

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kToy;
  int d_s = 128;
  int vocab_buckets = 4096;
  std::uint64_t seed = 0x5eed;

  void validate() const {
    if (d_s < 2) throw ConfigError("encoder.d_s must be >= 2");
    if (kind == EncoderKind::kToy && vocab_buckets < d_s)
      throw ConfigError("encoder.vocab_buckets must be >= encoder.d_s");
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct SentenceEmbedding {
  Eigen::VectorXd vector;
  std::pair<int, int> sent_ref;  // (para_idx, sent_id)
};

/// Pluggable transformer sentence encoder. Implementations own their weights
/// and gradient buffers; the trainer drives them through this interface so a
/// delegate is fine-tuned together with the rest of the model.
class EncoderDelegate {
 public:
  virtual ~EncoderDelegate() = default;
  virtual int dimension() const = 0;
  /// One row per text.
  virtual Eigen::MatrixXd embed(std::span<const std::string> texts) const = 0;
  virtual ParamList parameters() = 0;
  /// Same order and shapes as parameters().
  virtual ParamList gradients() = 0;
  virtual void zero_grad() = 0;
  /// Adds d(loss)/d(embedding) for each text to the gradient buffers.
  virtual void accumulate_gradient(std::span<const std::string> texts,
                                   const Eigen::MatrixXd& grad_embeddings) = 0;
  /// Whether embed() may be called from several threads at once.
  virtual bool concurrent_batches() const { return false; }
};

class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual const EncoderConfig& config() const = 0;
  virtual Eigen::MatrixXd embed(std::span<const std::string> texts) const = 0;
  virtual ParamList trainable_params() { return {}; }
  virtual ParamList trainable_grads() { return {}; }
  virtual void zero_grad() {}
  virtual void accumulate_gradient(std::span<const std::string>, const Eigen::MatrixXd&) {}
  bool trainable() { return !trainable_params().empty(); }
};

/// Lowercased alphanumeric tokens. Bytes >= 0x80 count as word characters so
/// UTF-8 words stay whole.
inline std::vector<std::string> toy_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

/// Hashed bag-of-words projected by a fixed seeded Gaussian matrix, then
/// L2-normalized. Frozen: exposes no trainable parameters.
class ToyEncoder final : public SentenceEncoder {
 public:
  explicit ToyEncoder(EncoderConfig config) : config_(config) { config_.validate(); }

  const EncoderConfig& config() const override { return config_; }

  std::uint32_t bucket(std::string_view token) const {
    return static_cast<std::uint32_t>(fnv1a64(token) % static_cast<std::uint64_t>(config_.vocab_buckets));
  }

  /// Column `b` of the projection matrix. Generated on demand from
  /// (seed, bucket) so the full d_s x vocab_buckets matrix is never stored.
  Eigen::VectorXd projection_column(std::uint32_t b) const {
    std::mt19937_64 rng(mix64(config_.seed ^ mix64(b)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd col(config_.d_s);
    for (int i = 0; i < config_.d_s; ++i) col[i] = normal(rng);
    return col;
  }

  Eigen::VectorXd embed_one(std::string_view text) const {
    std::vector<std::pair<std::uint32_t, int>> counts;
    for (const auto& tok : toy_tokenize(text)) {
      auto b = bucket(tok);
      auto it = std::find_if(counts.begin(), counts.end(), [b](const auto& p) { return p.first == b; });
      if (it == counts.end()) counts.emplace_back(b, 1);
      else ++it->second;
    }
    std::sort(counts.begin(), counts.end());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(config_.d_s);
    for (auto [b, n] : counts) v += static_cast<double>(n) * projection_column(b);
    double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
  }

  Eigen::MatrixXd embed(std::span<const std::string> texts) const override {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), config_.d_s);
    for (std::size_t i = 0; i < texts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = embed_one(texts[i]);
    return out;
  }

 private:
  EncoderConfig config_;
};

/// Routes encoding through a transformer delegate.
class TransformerAdapter final : public SentenceEncoder {
 public:
  TransformerAdapter(EncoderConfig config, std::shared_ptr<EncoderDelegate> delegate)
      : config_(config), delegate_(std::move(delegate)) {
    if (!delegate_)
      throw CapabilityError(
          "transformer-adapter encoder requested but no delegate is available; "
          "set encoder.kind = \"toy\" to use the built-in hashed encoder");
    if (delegate_->dimension() != config_.d_s)
      throw ConfigError("delegate dimension " + std::to_string(delegate_->dimension()) +
                        " does not match encoder.d_s " + std::to_string(config_.d_s));
  }

  const EncoderConfig& config() const override { return config_; }
  Eigen::MatrixXd embed(std::span<const std::string> texts) const override { return delegate_->embed(texts); }
  ParamList trainable_params() override { return delegate_->parameters(); }
  ParamList trainable_grads() override { return delegate_->gradients(); }
  void zero_grad() override { delegate_->zero_grad(); }
  void accumulate_gradient(std::span<const std::string> texts, const Eigen::MatrixXd& g) override {
    delegate_->accumulate_gradient(texts, g);
  }
  EncoderDelegate& delegate() { return *delegate_; }

 private:
  EncoderConfig config_;
  std::shared_ptr<EncoderDelegate> delegate_;
};

inline std::unique_ptr<SentenceEncoder> make_encoder(const EncoderConfig& config,
                                                     std::shared_ptr<EncoderDelegate> delegate = nullptr) {
  config.validate();
  if (config.kind == EncoderKind::kToy) return std::make_unique<ToyEncoder>(config);
  return std::make_unique<TransformerAdapter>(config, std::move(delegate));
}

/// Parameters that end-to-end fine-tuning updates inside the encoder.
inline ParamList trainable_params(const EncoderConfig& config,
                                  std::shared_ptr<EncoderDelegate> delegate = nullptr) {
  config.validate();
  if (config.kind == EncoderKind::kToy) return {};
  if (!delegate)
    throw CapabilityError("transformer-adapter encoder has no delegate; use encoder.kind = \"toy\"");
  return delegate->parameters();
}

inline std::vector<SentenceEmbedding> encode(std::span<const Sentence> sentences,
                                             const SentenceEncoder& encoder) {
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  Eigen::MatrixXd m = encoder.embed(texts);
  std::vector<SentenceEmbedding> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i)
    out.push_back({m.row(static_cast<Eigen::Index>(i)).transpose(), {sentences[i].para_idx, sentences[i].sent_id}});
  return out;
}

inline std::vector<SentenceEmbedding> encode(std::span<const Sentence> sentences, const EncoderConfig& config) {
  return encode(sentences, *make_encoder(config));
}

}  // namespace pcnn
