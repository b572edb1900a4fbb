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

// Multi-set evaluation protocol: for every (pos_ratio, train ratio) cell and
// every set, sample the corpus, split it leak-free, train a fresh model and
// score the held-out articles. Cells report per-metric mean and sample std.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcnn/common.hpp"
#include "pcnn/corpus.hpp"
#include "pcnn/metrics.hpp"

namespace pcnn {

class ArticleClassifier {
 public:
  virtual ~ArticleClassifier() = default;
  /// Probability that the article is self-contradictory. Must be safe to call
  /// concurrently on distinct articles.
  virtual double predict_prob(const Article& article) const = 0;
};

using ModelFactory =
    std::function<std::unique_ptr<ArticleClassifier>(std::span<const Article> train, std::uint64_t seed)>;

/// Coin-flip baseline. The draw for an article depends only on (seed, page,
/// revision), so results do not depend on evaluation order.
class RandomClassifier final : public ArticleClassifier {
 public:
  explicit RandomClassifier(std::uint64_t seed) : seed_(seed) {}
  double predict_prob(const Article& a) const override {
    const std::uint64_t h = mix64(seed_ ^ mix64(static_cast<std::uint64_t>(a.page_id) * 0x9e3779b97f4a7c15ULL ^
                                                static_cast<std::uint64_t>(a.rev_id)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
};

/// Returns the gold label; every metric comes out at 1.
class OracleClassifier final : public ArticleClassifier {
 public:
  double predict_prob(const Article& a) const override { return a.label ? 1.0 : 0.0; }
};

struct ProtocolSpec {
  std::string kind = "balanced";
  std::vector<double> pos_ratios{0.5};
  std::vector<double> trs{0.2, 0.4, 0.6, 0.8};
  int n_sets = 10;
  std::vector<int> ks{10, 20, 30};
  std::uint64_t master_seed = 0;
  int jobs = 1;
  double threshold = 0.5;

  static ProtocolSpec balanced(std::vector<double> trs, int n_sets, std::uint64_t seed) {
    return {"balanced", {0.5}, std::move(trs), n_sets, {10, 20, 30}, seed, 1, 0.5};
  }
  static ProtocolSpec imbalanced(std::vector<double> pos_ratios, int n_sets, std::uint64_t seed, double tr = 0.8) {
    return {"imbalanced", std::move(pos_ratios), {tr}, n_sets, {10, 20, 30}, seed, 1, 0.5};
  }
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

struct ProtocolRow {
  std::string protocol;
  double tr = 0.0;
  double pos_ratio = 0.5;
  int n_sets = 0;
  std::map<std::string, MetricSummary> metrics;
  std::vector<MetricsReport> per_set;
};

struct ProtocolReport {
  std::vector<ProtocolRow> rows;
};

inline MetricsReport evaluate_classifier(const ArticleClassifier& clf, std::span<const Article> test,
                                         std::span<const int> ks, double threshold = 0.5) {
  if (test.empty()) throw DataError("evaluation set is empty");
  std::vector<double> probs;
  std::vector<int> labels;
  for (const auto& a : test) {
    probs.push_back(clf.predict_prob(a));
    labels.push_back(a.label);
  }
  return evaluate_probs(probs, labels, ks, threshold);
}

/// Mean and sample standard deviation (0 for a single value).
inline MetricSummary summarize(std::span<const double> xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline std::string cell_tag(const std::string& kind, double pos_ratio, double tr, int set) {
  std::ostringstream os;
  os << "protocol/" << kind << "/pos=" << pos_ratio << "/tr=" << tr << "/set=" << set;
  return os.str();
}

inline ProtocolReport run_protocol(std::span<const Article> corpus, const ModelFactory& factory,
                                   const ProtocolSpec& spec) {
  if (spec.n_sets <= 0) throw ConfigError("protocol n_sets must be positive");
  if (spec.trs.empty() || spec.pos_ratios.empty()) throw ConfigError("protocol needs trs and pos_ratios");
  struct Task {
    std::size_t row;
    double pos_ratio;
    double tr;
    int set;
  };
  std::vector<Task> tasks;
  ProtocolReport report;
  for (double r : spec.pos_ratios) {
    for (double tr : spec.trs) {
      report.rows.push_back({spec.kind, tr, r, spec.n_sets, {}, {}});
      for (int s = 0; s < spec.n_sets; ++s) tasks.push_back({report.rows.size() - 1, r, tr, s});
    }
  }
  // Sampling errors surface before any training starts.
  for (double r : spec.pos_ratios) {
    std::size_t pos = 0;
    for (const auto& a : corpus) pos += a.label == 1;
    imbalanced_counts(pos, corpus.size() - pos, r);
  }

  auto run = [&](const Task& t) {
    const std::uint64_t cell = derive_seed(spec.master_seed, cell_tag(spec.kind, t.pos_ratio, t.tr, t.set));
    auto sample = sample_imbalanced(corpus, t.pos_ratio, derive_seed(cell, "sample"));
    auto split = split_train_test(sample, SplitSpec{t.tr, derive_seed(cell, "split"), t.pos_ratio});
    auto clf = factory(split.train, derive_seed(cell, "model"));
    auto m = evaluate_classifier(*clf, split.test, spec.ks, spec.threshold);
    m.seed = cell;
    return m;
  };

  std::vector<MetricsReport> results(tasks.size());
  const auto jobs = static_cast<std::size_t>(std::max(1, spec.jobs));
  for (std::size_t lo = 0; lo < tasks.size(); lo += jobs) {
    const std::size_t hi = std::min(tasks.size(), lo + jobs);
    if (jobs == 1) {
      results[lo] = run(tasks[lo]);
      continue;
    }
    std::vector<std::future<MetricsReport>> futures;
    for (std::size_t i = lo; i < hi; ++i) futures.push_back(std::async(std::launch::async, run, tasks[i]));
    for (std::size_t i = lo; i < hi; ++i) results[i] = futures[i - lo].get();
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) report.rows[tasks[i].row].per_set.push_back(results[i]);
  for (auto& row : report.rows) {
    std::map<std::string, std::vector<double>> columns;
    for (const auto& m : row.per_set)
      for (const auto& [name, v] : m.values()) columns[name].push_back(v);
    for (const auto& [name, xs] : columns) row.metrics[name] = summarize(xs);
  }
  return report;
}

inline void to_json(nlohmann::json& j, const ProtocolRow& r) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, s] : r.metrics) metrics[name] = {{"mean", s.mean}, {"std", s.std}};
  j = {{"protocol", r.protocol}, {"tr", r.tr},           {"pos_ratio", r.pos_ratio},
       {"n_sets", r.n_sets},     {"metrics", metrics},   {"per_set", r.per_set}};
}

inline void to_json(nlohmann::json& j, const ProtocolReport& r) { j = {{"rows", r.rows}}; }

/// One line per cell: protocol, tr, pos_ratio, then mean/std of Pre, Rec, F1, Acc.
inline void write_protocol_csv(std::ostream& out, const ProtocolReport& r) {
  static const char* kCols[] = {"precision", "recall", "f1", "accuracy"};
  out << "protocol,tr,pos_ratio,n_sets";
  for (const char* c : kCols) out << ',' << c << "_mean," << c << "_std";
  out << '\n';
  for (const auto& row : r.rows) {
    out << row.protocol << ',' << row.tr << ',' << row.pos_ratio << ',' << row.n_sets;
    for (const char* c : kCols) {
      auto it = row.metrics.find(c);
      MetricSummary s = it == row.metrics.end() ? MetricSummary{} : it->second;
      out << ',' << s.mean << ',' << s.std;
    }
    out << '\n';
  }
}

}  // namespace pcnn
