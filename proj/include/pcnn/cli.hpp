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

// Command-line front end. Every command resolves its configuration
// (defaults < --config file < flags), writes it to <out>/config.json and puts
// all of its artifacts in <out>.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 data error,
// 4 runtime error.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pcnn/checkpoint.hpp"
#include "pcnn/config.hpp"
#include "pcnn/corpus.hpp"
#include "pcnn/metrics.hpp"
#include "pcnn/pipeline.hpp"
#include "pcnn/protocol.hpp"
#include "pcnn/synthgen.hpp"

namespace pcnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

namespace fs = std::filesystem;

/// Writes progress lines to a stream and to <out>/log.txt.
class RunLog {
 public:
  RunLog(const fs::path& dir, std::ostream& echo) : file_(dir / "log.txt"), echo_(echo) {}
  void operator()(const std::string& line) {
    file_ << line << '\n';
    echo_ << line << '\n';
  }

 private:
  std::ofstream file_;
  std::ostream& echo_;
};

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::string require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required input --") + flag);
  return value;
}

/// Runs fn(i) for i in [0, n) with at most `jobs` in flight; results keep index order.
template <typename Fn>
auto parallel_map(std::size_t n, int jobs, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(n);
  const auto width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t lo = 0; lo < n; lo += width) {
    const std::size_t hi = std::min(n, lo + width);
    if (width == 1) {
      out[lo] = fn(lo);
      continue;
    }
    std::vector<std::future<R>> fut;
    for (std::size_t i = lo; i < hi; ++i) fut.push_back(std::async(std::launch::async, fn, i));
    for (std::size_t i = lo; i < hi; ++i) out[i] = fut[i - lo].get();
  }
  return out;
}

inline Split corpus_split(const ExperimentConfig& cfg, std::span<const Article> corpus) {
  return split_train_test(corpus, SplitSpec{cfg.train_ratio, cfg.stage_seed("split"), {}});
}

inline std::vector<NLIExample> optional_nli(const ExperimentConfig& cfg) {
  if (cfg.nli.empty()) return {};
  return load_nli(fs::path(cfg.nli));
}

inline nlohmann::json log_json(const TrainLog& log) {
  return {{"steps", log.steps}, {"epoch_loss", log.epoch_loss}, {"lr", log.lr_trace}, {"step_loss", log.step_loss}};
}

inline nlohmann::json explanation_json(const Article& a, const Prediction& p, std::size_t limit = 0) {
  std::map<int, const Sentence*> by_id;
  for (const auto& para : a.paragraphs)
    for (const auto& s : para) by_id[s.sent_id] = &s;
  auto sentence = [&](int para, int idx) {
    auto it = by_id.find(idx);
    return nlohmann::json{{"para", para}, {"idx", idx}, {"text", it == by_id.end() ? "" : it->second->text}};
  };
  nlohmann::json pairs = nlohmann::json::array();
  const std::size_t n = limit ? std::min(limit, p.explanation.size()) : p.explanation.size();
  for (std::size_t r = 0; r < n; ++r) {
    const auto& s = p.explanation[r];
    pairs.push_back({{"rank", r + 1},
                     {"prob", s.prob},
                     {"sent_i", sentence(s.pair.para_i, s.pair.sent_i)},
                     {"sent_j", sentence(s.pair.para_j, s.pair.sent_j)}});
  }
  return {{"page_id", a.page_id}, {"rev_id", a.rev_id}, {"title", a.title}, {"prob", p.prob},
          {"label", p.label},     {"pooled", p.pooled}, {"pairs", pairs}};
}

/// Trains one configuration on the training partition and scores the test partition.
inline nlohmann::json train_and_evaluate(const ExperimentConfig& cfg, const Split& split,
                                         const std::optional<PclParams>& pretrained) {
  auto encoder = std::shared_ptr<SentenceEncoder>(make_encoder(cfg.encoder));
  auto result = train_model(split.train, cfg, pretrained ? &*pretrained : nullptr, *encoder, cfg.seed);
  PcnnClassifier clf(result.model, encoder);
  auto metrics = evaluate_classifier(clf, split.test, cfg.protocol.ks, cfg.threshold);
  return {{"metrics", metrics}, {"train_loss", result.log.final_loss()}, {"steps", result.log.steps}};
}

struct Command {
  std::string name;
  std::string help;
  std::function<int(const ExperimentConfig&, RunLog&, std::ostream&)> run;
};

inline int cmd_synth(const ExperimentConfig& cfg, RunLog& log, std::ostream&) {
  const fs::path out(cfg.out);
  const auto spec = cfg.synth_spec();
  auto corpus = generate(spec);
  write_corpus(out / "corpus.jsonl", corpus.articles);
  {
    std::ofstream gt(out / "planted.jsonl");
    write_planted(gt, corpus.planted);
  }
  auto nli = generate_nli(spec, cfg.nli_examples);
  {
    std::ofstream f(out / "nli.jsonl");
    write_nli(f, nli);
  }
  std::size_t pos = 0;
  for (const auto& a : corpus.articles) pos += a.label;
  write_json(out / "synth_summary.json", {{"n_articles", corpus.articles.size()},
                                          {"n_pos", pos},
                                          {"n_neg", corpus.articles.size() - pos},
                                          {"n_nli", nli.size()}});
  log("synth: " + std::to_string(corpus.articles.size()) + " articles (" + std::to_string(pos) + " positive), " +
      std::to_string(nli.size()) + " NLI pairs");
  return kExitOk;
}

inline int cmd_build_nli(const ExperimentConfig& cfg, RunLog& log, std::ostream&) {
  if (cfg.snli.empty() && cfg.mnli.empty()) throw ConfigError("build-nli needs --snli and/or --mnli");
  NliBuildReport report;
  auto examples = build_nli(fs::path(cfg.snli), fs::path(cfg.mnli), &report);
  const fs::path out(cfg.out);
  {
    std::ofstream f(out / "nli.jsonl");
    write_nli(f, examples);
  }
  write_json(out / "nli_report.json", {{"contradiction", report.contradiction},
                                       {"entailment", report.entailment},
                                       {"neutral", report.neutral},
                                       {"dropped", report.dropped},
                                       {"positive", report.contradiction},
                                       {"negative", report.entailment + report.neutral}});
  log("build-nli: " + std::to_string(examples.size()) + " examples, " + std::to_string(report.contradiction) +
      " contradiction, " + std::to_string(report.dropped) + " dropped");
  return kExitOk;
}

inline int cmd_pretrain(const ExperimentConfig& cfg, RunLog& log, std::ostream&) {
  auto nli = load_nli(fs::path(require_path(cfg.nli, "nli")));
  if (cfg.ablation.no_pcl) throw ConfigError("pretrain is meaningless with ablation.no_pcl");
  ExperimentConfig c = cfg;
  c.pretrain_enabled = true;
  auto encoder = make_encoder(c.encoder);
  auto result = pretrain_stage(c, nli, *encoder);
  Model model = initial_model(c, &result->params, c.seed);
  const fs::path out(cfg.out);
  save_checkpoint(model, out / "pcl.ckpt",
                  {c.pretrain_hp(), result->log.steps, result->log.final_loss(), {{"stage", "pretrain"}}});
  const double acc = pcl_accuracy(nli, *encoder, result->params);
  auto j = log_json(result->log);
  j["train_accuracy"] = acc;
  write_json(out / "pretrain_log.json", j);
  log("pretrain: " + std::to_string(nli.size()) + " pairs, final loss " + std::to_string(result->log.final_loss()) +
      ", accuracy " + std::to_string(acc));
  return kExitOk;
}

inline int cmd_finetune(const ExperimentConfig& cfg, RunLog& log, std::ostream&) {
  auto corpus = load_corpus(fs::path(require_path(cfg.corpus, "corpus")));
  auto split = corpus_split(cfg, corpus);
  auto encoder = make_encoder(cfg.encoder);
  std::optional<PclParams> pretrained;
  if (!cfg.checkpoint.empty()) {
    pretrained = load_checkpoint(fs::path(cfg.checkpoint)).model.pcl;
    log("finetune: PCL weights from " + cfg.checkpoint);
  } else if (auto nli = optional_nli(cfg); !nli.empty()) {
    if (auto r = pretrain_stage(cfg, nli, *encoder)) {
      pretrained = r->params;
      log("finetune: pre-trained PCL on " + std::to_string(nli.size()) + " pairs");
    }
  }
  if (cfg.ablation.no_pcl) pretrained.reset();
  auto result = train_model(split.train, cfg, pretrained ? &*pretrained : nullptr, *encoder, cfg.seed);
  const fs::path out(cfg.out);
  save_checkpoint(result.model, out / "model.ckpt",
                  {cfg.finetune_hp(), result.log.steps, result.log.final_loss(), {{"stage", "finetune"}}});
  auto j = log_json(result.log);
  j["train_accuracy"] = accuracy(split.train, result.model, *encoder);
  write_json(out / "train_log.json", j);
  nlohmann::json train_pages = nlohmann::json::array(), test_pages = nlohmann::json::array();
  for (const auto& a : split.train) train_pages.push_back({a.page_id, a.rev_id});
  for (const auto& a : split.test) test_pages.push_back({a.page_id, a.rev_id});
  write_json(out / "split.json", {{"train", train_pages}, {"test", test_pages}});
  log("finetune: " + std::to_string(split.train.size()) + " training articles, " +
      std::to_string(result.log.steps) + " steps, final loss " + std::to_string(result.log.final_loss()));
  return kExitOk;
}

inline int cmd_evaluate(const ExperimentConfig& cfg, RunLog& log, std::ostream&) {
  auto corpus = load_corpus(fs::path(require_path(cfg.corpus, "corpus")));
  const fs::path out(cfg.out);
  if (!cfg.checkpoint.empty()) {
    auto ckpt = load_checkpoint(fs::path(cfg.checkpoint));
    auto split = corpus_split(cfg, corpus);
    auto encoder = std::shared_ptr<SentenceEncoder>(make_encoder(ckpt.model.encoder));
    PcnnClassifier clf(ckpt.model, encoder);
    auto metrics = evaluate_classifier(clf, split.test, cfg.protocol.ks, ckpt.model.threshold);
    auto random = evaluate_classifier(RandomClassifier(cfg.stage_seed("random")), split.test, cfg.protocol.ks,
                                      ckpt.model.threshold);
    write_json(out / "metrics.json", {{"split", "test"},
                                      {"n_test", split.test.size()},
                                      {"metrics", metrics},
                                      {"random_baseline", random}});
    log("evaluate: test F1 " + std::to_string(metrics.f1) + ", accuracy " + std::to_string(metrics.accuracy));
    return kExitOk;
  }
  std::optional<PclParams> pretrained;
  auto encoder = make_encoder(cfg.encoder);
  if (auto nli = optional_nli(cfg); !nli.empty())
    if (auto r = pretrain_stage(cfg, nli, *encoder)) pretrained = r->params;
  auto report = run_protocol(corpus, pcnn_factory(cfg, pretrained), cfg.protocol_spec());
  write_json(out / "report.json", report);
  std::ofstream csv(out / "report.csv");
  write_protocol_csv(csv, report);
  for (const auto& row : report.rows)
    log("evaluate: " + row.protocol + " tr=" + std::to_string(row.tr) + " pos_ratio=" + std::to_string(row.pos_ratio) +
        " F1 " + std::to_string(row.metrics.at("f1").mean));
  return kExitOk;
}

inline Article read_article_input(const std::string& article_path, const std::string& text_path) {
  if (!article_path.empty()) {
    std::ifstream in(article_path);
    if (!in) throw DataError("cannot read article " + article_path);
    try {
      return article_from_json(nlohmann::json::parse(in), 1);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(1, std::string("article is not valid JSON: ") + e.what());
    }
  }
  if (!text_path.empty()) {
    std::ifstream in(text_path);
    if (!in) throw DataError("cannot read text " + text_path);
    std::stringstream ss;
    ss << in.rdbuf();
    Article a;
    a.title = fs::path(text_path).stem().string();
    a.paragraphs = segment(ss.str());
    return a;
  }
  throw ConfigError("explain needs --article or --text");
}

inline int cmd_explain(const ExperimentConfig& cfg, const std::string& article_path, const std::string& text_path,
                       std::size_t top, RunLog& log, std::ostream& out) {
  auto ckpt = load_checkpoint(fs::path(require_path(cfg.checkpoint, "checkpoint")));
  auto article = read_article_input(article_path, text_path);
  auto encoder = make_encoder(ckpt.model.encoder);
  auto pred = predict(article, ckpt.model, *encoder);
  auto j = explanation_json(article, pred, top);
  write_json(fs::path(cfg.out) / "explanation.json", j);
  out << j.dump(2) << '\n';
  log("explain: prob " + std::to_string(pred.prob) + ", " + std::to_string(pred.explanation.size()) + " pairs ranked");
  return kExitOk;
}

inline int cmd_ablate(const ExperimentConfig& cfg, RunLog& log, std::ostream&) {
  auto corpus = load_corpus(fs::path(require_path(cfg.corpus, "corpus")));
  auto split = corpus_split(cfg, corpus);
  std::optional<PclParams> pretrained;
  {
    auto encoder = make_encoder(cfg.encoder);
    ExperimentConfig base = cfg;
    base.ablation = {};
    if (auto nli = optional_nli(cfg); !nli.empty())
      if (auto r = pretrain_stage(base, nli, *encoder)) pretrained = r->params;
  }
  const std::vector<std::pair<std::string, AblationFlags>> variants = {
      {"full", {}},
      {"no_sa", {.no_sa = true}},
      {"no_pcl", {.no_pcl = true}},
      {"no_sbert", {.no_sbert = true}},
      {"no_top_pair", {.no_top_pair = true}},
      {"no_paragraph", {.no_paragraph = true}},
  };
  auto results = parallel_map(variants.size(), cfg.jobs, [&](std::size_t i) {
    ExperimentConfig c = cfg;
    c.ablation = variants[i].second;
    if (c.ablation.no_sbert) c.encoder.kind = EncoderKind::kToy;
    return train_and_evaluate(c, split, c.ablation.no_pcl ? std::nullopt : pretrained);
  });
  nlohmann::json rows = nlohmann::json::array();
  const fs::path out(cfg.out);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    fs::create_directories(out / variants[i].first);
    write_json(out / variants[i].first / "metrics.json", results[i]);
    rows.push_back({{"variant", variants[i].first}, {"flags", variants[i].second}, {"result", results[i]}});
    log("ablate: " + variants[i].first + " F1 " + std::to_string(results[i]["metrics"]["f1"].get<double>()));
  }
  write_json(out / "ablation.json", {{"variants", rows}});
  return kExitOk;
}

inline int cmd_sweep_k(const ExperimentConfig& cfg, RunLog& log, std::ostream&) {
  auto corpus = load_corpus(fs::path(require_path(cfg.corpus, "corpus")));
  auto split = corpus_split(cfg, corpus);
  std::optional<PclParams> pretrained;
  {
    auto encoder = make_encoder(cfg.encoder);
    if (auto nli = optional_nli(cfg); !nli.empty())
      if (auto r = pretrain_stage(cfg, nli, *encoder)) pretrained = r->params;
  }
  auto results = parallel_map(cfg.sweep_ks.size(), cfg.jobs, [&](std::size_t i) {
    ExperimentConfig c = cfg;
    c.dims.k = cfg.sweep_ks[i];
    return train_and_evaluate(c, split, pretrained);
  });
  const fs::path out(cfg.out);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const int k = cfg.sweep_ks[i];
    const fs::path dir = out / ("k_" + std::to_string(k));
    fs::create_directories(dir);
    write_json(dir / "metrics.json", results[i]);
    rows.push_back({{"k", k}, {"f1", results[i]["metrics"]["f1"]}, {"result", results[i]}});
    log("sweep-k: K=" + std::to_string(k) + " F1 " + std::to_string(results[i]["metrics"]["f1"].get<double>()));
  }
  write_json(out / "sweep_k.json", {{"ks", cfg.sweep_ks}, {"rows", rows}});
  return kExitOk;
}

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kConfig: return kExitConfig;
    case ErrorKind::kData: return kExitData;
    case ErrorKind::kRuntime: return kExitRuntime;
  }
  return kExitRuntime;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"pcnn: self-contradiction detection for encyclopedia articles"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  const nlohmann::json defaults = config_to_json(ExperimentConfig{});
  const auto leaves = leaf_paths(defaults);

  struct SubState {
    CLI::App* app = nullptr;
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string n_alias, ks_alias;
    std::string article, text;
    std::size_t top = 0;
  };
  const std::vector<std::pair<std::string, std::string>> names = {
      {"build-nli", "Convert SNLI/MNLI JSONL into binary contradiction pairs"},
      {"synth", "Generate a synthetic corpus with planted contradictions"},
      {"pretrain", "Pre-train the pairwise contradiction network on NLI pairs"},
      {"finetune", "Fine-tune the full model on the training split of a corpus"},
      {"evaluate", "Evaluate a checkpoint on the test split, or run the multi-set protocol"},
      {"explain", "Rank the most contradictory sentence pairs of one article"},
      {"ablate", "Train and evaluate every ablation variant"},
      {"sweep-k", "Train and evaluate across top-K values"}};
  std::map<std::string, std::unique_ptr<SubState>> subs;
  for (const auto& [name, help] : names) {
    auto st = std::make_unique<SubState>();
    st->app = app.add_subcommand(name, help);
    st->app->add_option("--config", st->config_path, "JSON config file (flags override its values)");
    for (const auto& path : leaves) {
      nlohmann::json::json_pointer ptr("/" + detail::replace_all(path, ".", "/"));
      const auto& leaf = defaults[ptr];
      std::string shown = leaf.is_string() ? leaf.get<std::string>() : leaf.dump();
      st->options[path] = st->app->add_option("--" + path, st->values[path], "default: " + shown);
    }
    if (name == "synth") st->app->add_option("--n", st->n_alias, "alias of --synth.n_articles");
    if (name == "sweep-k") st->app->add_option("--ks", st->ks_alias, "alias of --sweep.ks (comma-separated)");
    if (name == "explain") {
      st->app->add_option("--article", st->article, "article JSON record (corpus schema)");
      st->app->add_option("--text", st->text, "plain-text article; paragraphs separated by blank lines");
      st->app->add_option("--top", st->top, "limit the ranked list to this many pairs (0 = all)");
    }
    subs[name] = std::move(st);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    SubState* st = nullptr;
    std::string name;
    for (auto& [n, s] : subs)
      if (s->app->parsed()) {
        st = s.get();
        name = n;
      }
    if (!st) throw ConfigError("no command given");

    nlohmann::json tree = defaults;
    if (!st->config_path.empty()) {
      std::ifstream in(st->config_path);
      if (!in) throw ConfigError("cannot read config file " + st->config_path);
      nlohmann::json file;
      try {
        file = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
      }
      (void)config_from_json(file);  // rejects unknown keys
      tree.merge_patch(file);
    }
    std::map<std::string, std::string> overrides;
    for (const auto& [path, opt] : st->options)
      if (opt->count() > 0) overrides[path] = st->values[path];
    if (!st->n_alias.empty()) overrides["synth.n_articles"] = st->n_alias;
    if (!st->ks_alias.empty()) overrides["sweep.ks"] = st->ks_alias;
    apply_overrides(tree, overrides);
    const ExperimentConfig cfg = config_from_json(tree);

    fs::create_directories(cfg.out);
    nlohmann::json resolved = config_to_json(cfg);
    write_json(fs::path(cfg.out) / "config.json", resolved);
    RunLog log(cfg.out, err);

    if (name == "synth") return cmd_synth(cfg, log, out);
    if (name == "build-nli") return cmd_build_nli(cfg, log, out);
    if (name == "pretrain") return cmd_pretrain(cfg, log, out);
    if (name == "finetune") return cmd_finetune(cfg, log, out);
    if (name == "evaluate") return cmd_evaluate(cfg, log, out);
    if (name == "explain") return cmd_explain(cfg, st->article, st->text, st->top, log, out);
    if (name == "ablate") return cmd_ablate(cfg, log, out);
    if (name == "sweep-k") return cmd_sweep_k(cfg, log, out);
    throw ConfigError("unknown command " + name);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace pcnn::cli
