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

// Experiment configuration. The on-disk form is a JSON tree; every leaf can be
// overridden from the command line as --<dotted.path>. Stage seeds are derived
// from the master seed as derive_seed(seed, "<stage>") with stages "synth",
// "split", "init", "pretrain", "finetune" and "protocol".

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcnn/aggregator.hpp"
#include "pcnn/common.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/optim.hpp"
#include "pcnn/protocol.hpp"
#include "pcnn/serialize.hpp"
#include "pcnn/synthgen.hpp"

namespace pcnn {

struct ExperimentConfig {
  std::uint64_t seed = 7;
  int jobs = 1;

  std::string corpus;
  std::string nli;
  std::string snli;
  std::string mnli;
  std::string checkpoint;
  std::string out = "runs/default";

  EncoderConfig encoder;
  ModelDims dims;
  PairScope scope = PairScope::kParagraph;
  double threshold = 0.5;
  AblationFlags ablation;

  bool pretrain_enabled = true;
  Hyperparams pretrain;
  Hyperparams finetune;

  double train_ratio = 0.8;

  ProtocolSpec protocol;

  SynthSpec synth = default_synth_spec();
  int nli_examples = 1000;

  std::vector<int> sweep_ks{1, 5, 10, 20, 30, 40, 50};

  std::uint64_t stage_seed(std::string_view stage) const { return derive_seed(seed, stage); }

  Hyperparams pretrain_hp() const {
    Hyperparams h = pretrain;
    h.seed = stage_seed("pretrain");
    return h;
  }
  Hyperparams finetune_hp() const {
    Hyperparams h = finetune;
    h.seed = stage_seed("finetune");
    return h;
  }
  SynthSpec synth_spec() const {
    SynthSpec s = synth;
    s.seed = stage_seed("synth");
    return s;
  }
  ProtocolSpec protocol_spec() const {
    ProtocolSpec p = protocol;
    p.master_seed = stage_seed("protocol");
    p.jobs = jobs;
    p.threshold = threshold;
    return p;
  }

  void validate() const {
    encoder.validate();
    dims.validate();
    ablation.validate();
    if (encoder.d_s != dims.d_s) throw ConfigError("encoder.d_s and model dims disagree");
    pretrain.validate();
    finetune.validate();
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("split.train_ratio must lie in (0,1)");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("model.threshold must lie in [0,1]");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (protocol.kind != "balanced" && protocol.kind != "imbalanced")
      throw ConfigError("protocol.kind must be 'balanced' or 'imbalanced'");
    for (int k : sweep_ks)
      if (k <= 0) throw ConfigError("sweep.ks entries must be positive");
    synth.validate();
  }
};

namespace detail {

inline nlohmann::json hp_json(const Hyperparams& h) {
  return {{"batch_size", h.batch_size},
          {"learning_rate", h.learning_rate},
          {"warmup_fraction", h.warmup_fraction},
          {"epochs", h.epochs}};
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json pre = detail::hp_json(c.pretrain);
  pre["enabled"] = c.pretrain_enabled;
  return {
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"corpus", c.corpus},
      {"nli", c.nli},
      {"snli", c.snli},
      {"mnli", c.mnli},
      {"checkpoint", c.checkpoint},
      {"out", c.out},
      {"encoder", {{"kind", to_string(c.encoder.kind)}, {"d_s", c.encoder.d_s},
                   {"vocab_buckets", c.encoder.vocab_buckets}, {"seed", c.encoder.seed}}},
      {"model", {{"d_t", c.dims.d_t}, {"d_a", c.dims.d_a}, {"hidden", c.dims.hidden}, {"k", c.dims.k},
                 {"scope", to_string(c.scope)}, {"threshold", c.threshold}}},
      {"ablation", c.ablation},
      {"pretrain", pre},
      {"finetune", detail::hp_json(c.finetune)},
      {"split", {{"train_ratio", c.train_ratio}}},
      {"protocol", {{"kind", c.protocol.kind}, {"trs", c.protocol.trs}, {"pos_ratios", c.protocol.pos_ratios},
                    {"n_sets", c.protocol.n_sets}, {"ks", c.protocol.ks}}},
      {"synth", {{"n_articles", c.synth.n_articles}, {"pos_fraction", c.synth.pos_fraction},
                 {"paragraphs_min", c.synth.paragraphs_per_article.lo},
                 {"paragraphs_max", c.synth.paragraphs_per_article.hi},
                 {"sentences_min", c.synth.sentences_per_paragraph.lo},
                 {"sentences_max", c.synth.sentences_per_paragraph.hi},
                 {"cross_paragraph", c.synth.cross_paragraph}, {"fact_rate", c.synth.fact_rate},
                 {"nli_examples", c.nli_examples}}},
      {"sweep", {{"ks", c.sweep_ks}}},
  };
}

/// Reads a (possibly partial) tree on top of the defaults. Unknown keys are
/// rejected so typos do not pass silently.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  const nlohmann::json defaults = config_to_json(c);
  std::function<void(const nlohmann::json&, const nlohmann::json&, const std::string&)> check =
      [&](const nlohmann::json& node, const nlohmann::json& ref, const std::string& prefix) {
        if (!node.is_object()) throw ConfigError("config node '" + prefix + "' must be an object");
        for (auto it = node.begin(); it != node.end(); ++it) {
          const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
          if (!ref.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
          if (ref[it.key()].is_object()) check(it.value(), ref[it.key()], path);
        }
      };
  check(j, defaults, "");
  nlohmann::json m = defaults;
  m.merge_patch(j);
  try {
    c.seed = m["seed"].get<std::uint64_t>();
    c.jobs = m["jobs"].get<int>();
    c.corpus = m["corpus"].get<std::string>();
    c.nli = m["nli"].get<std::string>();
    c.snli = m["snli"].get<std::string>();
    c.mnli = m["mnli"].get<std::string>();
    c.checkpoint = m["checkpoint"].get<std::string>();
    c.out = m["out"].get<std::string>();
    c.encoder = m["encoder"].get<EncoderConfig>();
    const auto& model = m["model"];
    c.dims.d_s = c.encoder.d_s;
    c.dims.d_t = model["d_t"].get<int>();
    c.dims.d_a = model["d_a"].get<int>();
    c.dims.hidden = model["hidden"].get<int>();
    c.dims.k = model["k"].get<int>();
    c.scope = pair_scope_from_string(model["scope"].get<std::string>());
    c.threshold = model["threshold"].get<double>();
    c.ablation = m["ablation"].get<AblationFlags>();
    c.pretrain = m["pretrain"].get<Hyperparams>();
    c.pretrain_enabled = m["pretrain"]["enabled"].get<bool>();
    c.finetune = m["finetune"].get<Hyperparams>();
    c.train_ratio = m["split"]["train_ratio"].get<double>();
    const auto& p = m["protocol"];
    c.protocol.kind = p["kind"].get<std::string>();
    c.protocol.trs = p["trs"].get<std::vector<double>>();
    c.protocol.pos_ratios = p["pos_ratios"].get<std::vector<double>>();
    c.protocol.n_sets = p["n_sets"].get<int>();
    c.protocol.ks = p["ks"].get<std::vector<int>>();
    const auto& s = m["synth"];
    c.synth.n_articles = s["n_articles"].get<int>();
    c.synth.pos_fraction = s["pos_fraction"].get<double>();
    c.synth.paragraphs_per_article = {s["paragraphs_min"].get<int>(), s["paragraphs_max"].get<int>()};
    c.synth.sentences_per_paragraph = {s["sentences_min"].get<int>(), s["sentences_max"].get<int>()};
    c.synth.cross_paragraph = s["cross_paragraph"].get<bool>();
    c.synth.fact_rate = s["fact_rate"].get<double>();
    c.nli_examples = s["nli_examples"].get<int>();
    c.sweep_ks = m["sweep"]["ks"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

/// Dotted paths of every leaf in a JSON tree, e.g. "model.k".
inline std::vector<std::string> leaf_paths(const nlohmann::json& tree, const std::string& prefix = "") {
  std::vector<std::string> out;
  for (auto it = tree.begin(); it != tree.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      auto sub = leaf_paths(it.value(), path);
      out.insert(out.end(), sub.begin(), sub.end());
    } else {
      out.push_back(path);
    }
  }
  return out;
}

/// Parses a command-line string into the JSON type of `like`. Arrays take
/// comma-separated values.
inline nlohmann::json parse_leaf(const std::string& path, const std::string& text, const nlohmann::json& like) {
  auto fail = [&]() -> nlohmann::json {
    throw ConfigError("--" + path + ": cannot parse '" + text + "'");
  };
  auto scalar = [&](const std::string& t, const nlohmann::json& kind) -> nlohmann::json {
    try {
      std::size_t used = 0;
      if (kind.is_boolean()) {
        if (t == "true" || t == "1") return true;
        if (t == "false" || t == "0") return false;
        return fail();
      }
      if (kind.is_number_unsigned()) {
        if (!t.empty() && t[0] == '-') return fail();
        auto v = std::stoull(t, &used);
        return used == t.size() ? nlohmann::json(v) : fail();
      }
      if (kind.is_number_integer()) {
        auto v = std::stoll(t, &used);
        return used == t.size() ? nlohmann::json(v) : fail();
      }
      if (kind.is_number()) {
        auto v = std::stod(t, &used);
        return used == t.size() ? nlohmann::json(v) : fail();
      }
      return t;
    } catch (const std::logic_error&) {
      return fail();
    }
  };
  if (like.is_array()) {
    nlohmann::json arr = nlohmann::json::array();
    const nlohmann::json elem = like.empty() ? nlohmann::json(0.0) : like.front();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      arr.push_back(scalar(item, elem));
    }
    return arr;
  }
  return scalar(text, like);
}

/// Applies "--a.b=value" style overrides (given as path -> text) to a tree.
inline void apply_overrides(nlohmann::json& tree, const std::map<std::string, std::string>& overrides) {
  for (const auto& [path, text] : overrides) {
    nlohmann::json::json_pointer ptr("/" + detail::replace_all(path, ".", "/"));
    if (!tree.contains(ptr)) throw ConfigError("unknown option --" + path);
    tree[ptr] = parse_leaf(path, text, tree[ptr]);
  }
}

}  // namespace pcnn
