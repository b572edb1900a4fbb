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
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcnn/common.hpp"

namespace pcnn {

/// Threshold and ranking metrics for one evaluation run. The positive class is
/// label 1 (self-contradictory).
struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::map<int, double> precision_at;
  std::map<int, double> recall_at;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::uint64_t seed = 0;

  /// Flat name -> value view ("precision@10", ...).
  std::map<std::string, double> values() const {
    std::map<std::string, double> v{{"precision", precision}, {"recall", recall}, {"f1", f1}, {"accuracy", accuracy}};
    for (auto [k, x] : precision_at) v["precision@" + std::to_string(k)] = x;
    for (auto [k, x] : recall_at) v["recall@" + std::to_string(k)] = x;
    return v;
  }
};

inline void to_json(nlohmann::json& j, const MetricsReport& m) {
  nlohmann::json pa = nlohmann::json::object(), ra = nlohmann::json::object();
  for (auto [k, x] : m.precision_at) pa[std::to_string(k)] = x;
  for (auto [k, x] : m.recall_at) ra[std::to_string(k)] = x;
  j = {{"precision", m.precision}, {"recall", m.recall},   {"f1", m.f1},       {"accuracy", m.accuracy},
       {"precision_at", pa},       {"recall_at", ra},      {"n_pos", m.n_pos}, {"n_neg", m.n_neg},
       {"seed", m.seed}};
}

/// Zero-denominator conventions: precision is 0 without positive predictions,
/// recall is 0 without positive labels, F1 is 0 when P + R = 0.
inline MetricsReport confusion_metrics(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size())
    throw InvalidArgument("confusion_metrics: " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  if (preds.empty()) throw InvalidArgument("confusion_metrics: no examples");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && labels[i] == 1) ++tp;
    else if (preds[i] == 1) ++fp;
    else if (labels[i] == 1) ++fn;
    else ++tn;
  }
  MetricsReport r;
  r.n_pos = tp + fn;
  r.n_neg = fp + tn;
  r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(preds.size());
  return r;
}

struct RankingMetrics {
  std::map<int, double> precision_at;
  std::map<int, double> recall_at;
};

/// Precision@k and Recall@k over articles sorted by probability descending
/// (ties keep input order). Recall@k is 0 when there are no positives.
inline RankingMetrics ranking_metrics(std::span<const double> probs, std::span<const int> labels,
                                      std::span<const int> ks) {
  if (probs.size() != labels.size()) throw InvalidArgument("ranking_metrics: length mismatch");
  for (int k : ks)
    if (k <= 0 || static_cast<std::size_t>(k) > probs.size())
      throw InvalidArgument("ranking_metrics: k = " + std::to_string(k) + " out of range [1, " +
                            std::to_string(probs.size()) + "]");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  const auto total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  std::vector<std::size_t> prefix(order.size() + 1, 0);
  for (std::size_t i = 0; i < order.size(); ++i) prefix[i + 1] = prefix[i] + (labels[order[i]] == 1);
  RankingMetrics out;
  for (int k : ks) {
    const auto hits = static_cast<double>(prefix[static_cast<std::size_t>(k)]);
    out.precision_at[k] = hits / k;
    out.recall_at[k] = total_pos ? hits / static_cast<double>(total_pos) : 0.0;
  }
  return out;
}

/// Threshold metrics at `threshold` plus ranking metrics for every k that fits.
inline MetricsReport evaluate_probs(std::span<const double> probs, std::span<const int> labels,
                                    std::span<const int> ks, double threshold = 0.5) {
  std::vector<int> preds;
  preds.reserve(probs.size());
  for (double p : probs) preds.push_back(p >= threshold ? 1 : 0);
  auto report = confusion_metrics(preds, labels);
  std::vector<int> fitting;
  for (int k : ks)
    if (k > 0 && static_cast<std::size_t>(k) <= probs.size()) fitting.push_back(k);
  auto rank = ranking_metrics(probs, labels, fitting);
  report.precision_at = std::move(rank.precision_at);
  report.recall_at = std::move(rank.recall_at);
  return report;
}

}  // namespace pcnn
