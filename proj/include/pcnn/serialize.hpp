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

// nlohmann::json conversions for configuration value types.

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "pcnn/aggregator.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/optim.hpp"
#include "pcnn/pcl.hpp"

namespace pcnn {

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"kind", to_string(c.kind)}, {"d_s", c.d_s}, {"vocab_buckets", c.vocab_buckets}, {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, EncoderConfig& c) {
  std::string kind = to_string(c.kind);
  detail::read_field(j, "kind", kind);
  c.kind = encoder_kind_from_string(kind);
  detail::read_field(j, "d_s", c.d_s);
  detail::read_field(j, "vocab_buckets", c.vocab_buckets);
  detail::read_field(j, "seed", c.seed);
}

inline void to_json(nlohmann::json& j, const ModelDims& d) {
  j = {{"d_s", d.d_s}, {"d_t", d.d_t}, {"d_a", d.d_a}, {"hidden", d.hidden}, {"k", d.k}};
}
inline void from_json(const nlohmann::json& j, ModelDims& d) {
  detail::read_field(j, "d_s", d.d_s);
  detail::read_field(j, "d_t", d.d_t);
  detail::read_field(j, "d_a", d.d_a);
  detail::read_field(j, "hidden", d.hidden);
  detail::read_field(j, "k", d.k);
}

inline void to_json(nlohmann::json& j, const AblationFlags& f) {
  j = {{"no_sa", f.no_sa},
       {"no_pcl", f.no_pcl},
       {"no_sbert", f.no_sbert},
       {"no_top_pair", f.no_top_pair},
       {"no_paragraph", f.no_paragraph}};
}
inline void from_json(const nlohmann::json& j, AblationFlags& f) {
  detail::read_field(j, "no_sa", f.no_sa);
  detail::read_field(j, "no_pcl", f.no_pcl);
  detail::read_field(j, "no_sbert", f.no_sbert);
  detail::read_field(j, "no_top_pair", f.no_top_pair);
  detail::read_field(j, "no_paragraph", f.no_paragraph);
}

inline void to_json(nlohmann::json& j, const Hyperparams& h) {
  j = {{"batch_size", h.batch_size},
       {"learning_rate", h.learning_rate},
       {"warmup_fraction", h.warmup_fraction},
       {"epochs", h.epochs},
       {"seed", h.seed}};
}
inline void from_json(const nlohmann::json& j, Hyperparams& h) {
  detail::read_field(j, "batch_size", h.batch_size);
  detail::read_field(j, "learning_rate", h.learning_rate);
  detail::read_field(j, "warmup_fraction", h.warmup_fraction);
  detail::read_field(j, "epochs", h.epochs);
  detail::read_field(j, "seed", h.seed);
}

}  // namespace pcnn
