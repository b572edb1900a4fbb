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

// Article and NLI corpora: segmentation, JSONL I/O, leak-free splitting and
// class-ratio resampling.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcnn/common.hpp"

namespace pcnn {

struct Sentence {
  int sent_id = 0;   // index within the article, document order
  int para_idx = 0;
  std::string text;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

using Paragraph = std::vector<Sentence>;

struct Article {
  std::int64_t page_id = 0;
  std::int64_t rev_id = 0;
  std::string title;
  int label = 0;  // 1 = self-contradictory
  std::vector<Paragraph> paragraphs;

  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs) n += p.size();
    return n;
  }

  std::vector<Sentence> sentences() const {
    std::vector<Sentence> out;
    out.reserve(sentence_count());
    for (const auto& p : paragraphs) out.insert(out.end(), p.begin(), p.end());
    return out;
  }

  friend bool operator==(const Article&, const Article&) = default;
};

struct NLIExample {
  std::string premise;
  std::string hypothesis;
  int label = 0;  // 1 = contradiction

  friend bool operator==(const NLIExample&, const NLIExample&) = default;
};

struct SplitSpec {
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
  std::optional<double> pos_ratio;
};

struct Split {
  std::vector<Article> train;
  std::vector<Article> test;
};

namespace detail {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline std::string collapse_whitespace(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  bool pending = false;
  for (char c : in) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_abbreviation(std::string_view word_with_dot) {
  static const std::set<std::string, std::less<>> kAbbrev = {
      "mr.",   "mrs.", "ms.",  "dr.",   "prof.", "st.",  "jr.",   "sr.",  "vs.",
      "etc.",  "e.g.", "i.e.", "inc.",  "ltd.",  "co.",  "corp.", "no.",  "mt.",
      "gen.",  "col.", "lt.",  "sgt.",  "capt.", "rev.", "hon.",  "jan.", "feb.",
      "mar.",  "apr.", "jun.", "jul.",  "aug.",  "sep.", "sept.", "oct.", "nov.",
      "dec.",  "fig.", "approx.", "est.", "ft.", "u.s.", "u.k.", "a.m.", "p.m.",
      "ca.",   "cf.",  "vol.", "pp.",   "ed.",   "dept.", "univ."};
  // Strip leading punctuation such as an opening parenthesis or quote.
  std::size_t start = 0;
  while (start < word_with_dot.size() &&
         !std::isalnum(static_cast<unsigned char>(word_with_dot[start])))
    ++start;
  auto w = lower_ascii(word_with_dot.substr(start));
  return kAbbrev.contains(w);
}

inline bool is_initial(std::string_view w) {
  return w.size() == 2 && std::isalpha(static_cast<unsigned char>(w[0])) && w[1] == '.';
}

/// True when the text at `k` reads as the rest of a name after an initial:
/// optional further initials, then a capitalized word ("J. R. Tolkien").
inline bool name_follows(std::string_view s, std::size_t k) {
  while (k < s.size()) {
    std::size_t end = s.find(' ', k);
    auto word = s.substr(k, end == std::string_view::npos ? std::string_view::npos : end - k);
    if (is_initial(word)) {
      if (end == std::string_view::npos) return false;
      k = end + 1;
      continue;
    }
    return word.size() >= 2 && std::isupper(static_cast<unsigned char>(word[0])) &&
           std::isalpha(static_cast<unsigned char>(word[1]));
  }
  return false;
}

inline bool is_closer(char c) {
  return c == '.' || c == '!' || c == '?' || c == '"' || c == '\'' || c == ')' || c == ']';
}

inline bool starts_sentence(std::string_view s, std::size_t k) {
  while (k < s.size() && (s[k] == '"' || s[k] == '(' || s[k] == '\'')) ++k;
  if (k >= s.size()) return false;
  auto c = static_cast<unsigned char>(s[k]);
  return std::isupper(c) || std::isdigit(c);
}

/// Splits one whitespace-collapsed paragraph into sentence strings.
inline std::vector<std::string> split_sentences(std::string_view para) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < para.size()) {
    char c = para[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < para.size() && is_closer(para[j])) ++j;
    bool boundary = false;
    if (j >= para.size()) {
      boundary = true;
    } else if (para[j] == ' ' && starts_sentence(para, j + 1)) {
      boundary = true;
      if (c == '.') {
        std::size_t ws = para.rfind(' ', i);
        std::size_t word_begin = ws == std::string_view::npos ? begin : ws + 1;
        if (word_begin < begin) word_begin = begin;
        auto word = para.substr(word_begin, i + 1 - word_begin);
        if (is_abbreviation(word) || (is_initial(word) && name_follows(para, j + 1))) boundary = false;
      }
    }
    if (boundary) {
      out.emplace_back(para.substr(begin, j - begin));
      begin = j;
      while (begin < para.size() && para[begin] == ' ') ++begin;
      i = begin;
    } else {
      i = j;
    }
  }
  if (begin < para.size()) out.emplace_back(para.substr(begin));
  return out;
}

}  // namespace detail

/// Splits plain text into paragraphs (blank-line delimited) of sentences.
/// Sentence ids run over the whole text in document order.
inline std::vector<Paragraph> segment(std::string_view raw_text) {
  std::vector<std::string> blocks;
  std::string current;
  std::size_t pos = 0;
  while (pos <= raw_text.size()) {
    std::size_t nl = raw_text.find('\n', pos);
    std::string_view line =
        raw_text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    bool blank = std::all_of(line.begin(), line.end(), detail::is_space);
    if (blank) {
      if (!current.empty()) blocks.push_back(std::move(current));
      current.clear();
    } else {
      current.append(line);
      current.push_back('\n');
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!current.empty()) blocks.push_back(std::move(current));

  std::vector<Paragraph> paragraphs;
  int sent_id = 0;
  for (const auto& block : blocks) {
    auto text = detail::collapse_whitespace(block);
    if (text.empty()) continue;
    Paragraph para;
    for (auto& s : detail::split_sentences(text)) {
      para.push_back(Sentence{sent_id++, static_cast<int>(paragraphs.size()), std::move(s)});
    }
    if (!para.empty()) paragraphs.push_back(std::move(para));
  }
  if (paragraphs.empty()) throw EmptyInputError("segment: input contains no sentence");
  return paragraphs;
}

/// Builds an article from already-segmented paragraph strings. Sentence text is
/// whitespace-normalized; empty sentences or paragraphs are schema errors.
inline Article make_article(std::int64_t page_id, std::int64_t rev_id, std::string title,
                            int label, const std::vector<std::vector<std::string>>& paragraphs,
                            std::size_t line = 0) {
  if (label != 0 && label != 1)
    throw SchemaError(line, "label must be 0 or 1, got " + std::to_string(label));
  Article a{page_id, rev_id, std::move(title), label, {}};
  int sent_id = 0;
  for (const auto& p : paragraphs) {
    if (p.empty()) throw SchemaError(line, "empty paragraph");
    Paragraph para;
    for (const auto& s : p) {
      auto text = detail::collapse_whitespace(s);
      if (text.empty()) throw SchemaError(line, "empty sentence");
      para.push_back(Sentence{sent_id++, static_cast<int>(a.paragraphs.size()), std::move(text)});
    }
    a.paragraphs.push_back(std::move(para));
  }
  if (a.paragraphs.empty()) throw SchemaError(line, "article has no sentences");
  return a;
}

inline nlohmann::json article_to_json(const Article& a) {
  nlohmann::json paras = nlohmann::json::array();
  for (const auto& p : a.paragraphs) {
    nlohmann::json sents = nlohmann::json::array();
    for (const auto& s : p) sents.push_back(s.text);
    paras.push_back(std::move(sents));
  }
  return {{"page_id", a.page_id},
          {"rev_id", a.rev_id},
          {"title", a.title},
          {"label", a.label},
          {"paragraphs", std::move(paras)}};
}

inline Article article_from_json(const nlohmann::json& j, std::size_t line = 0) {
  if (!j.is_object()) throw SchemaError(line, "record is not a JSON object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(line, std::string("missing field '") + key + "'");
    return *it;
  };
  const auto& page = require("page_id");
  const auto& rev = require("rev_id");
  const auto& title = require("title");
  const auto& label = require("label");
  const auto& paras = require("paragraphs");
  if (!page.is_number_integer()) throw SchemaError(line, "page_id must be an integer");
  if (!rev.is_number_integer()) throw SchemaError(line, "rev_id must be an integer");
  if (!title.is_string()) throw SchemaError(line, "title must be a string");
  if (!label.is_number_integer()) throw SchemaError(line, "label must be 0 or 1");
  if (!paras.is_array()) throw SchemaError(line, "paragraphs must be an array of arrays");
  std::vector<std::vector<std::string>> text;
  for (const auto& p : paras) {
    if (!p.is_array()) throw SchemaError(line, "paragraphs must be an array of arrays");
    auto& out = text.emplace_back();
    for (const auto& s : p) {
      if (!s.is_string()) throw SchemaError(line, "sentences must be strings");
      out.push_back(s.get<std::string>());
    }
  }
  return make_article(page.get<std::int64_t>(), rev.get<std::int64_t>(), title.get<std::string>(),
                      label.get<int>(), text, line);
}

/// Reads corpus JSONL. Blank lines are skipped; any invalid record throws a
/// SchemaError carrying its 1-based line number.
inline std::vector<Article> load_corpus(std::istream& in) {
  std::vector<Article> out;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), detail::is_space)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(lineno, std::string("invalid JSON: ") + e.what());
    }
    auto a = article_from_json(j, lineno);
    if (!seen.emplace(a.page_id, a.rev_id).second)
      throw SchemaError(lineno, "duplicate (page_id, rev_id) = (" + std::to_string(a.page_id) +
                                    ", " + std::to_string(a.rev_id) + ")");
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<Article> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return load_corpus(in);
}

inline void write_corpus(std::ostream& out, std::span<const Article> articles) {
  for (const auto& a : articles) out << article_to_json(a).dump() << '\n';
}

inline void write_corpus(const std::filesystem::path& path, std::span<const Article> articles) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  write_corpus(out, articles);
}

/// Leak-free split: all versions of a page land in the same partition.
/// round(train_ratio * #pages) pages go to train; each partition keeps input order.
inline Split split_train_test(std::span<const Article> articles, const SplitSpec& spec) {
  if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0))
    throw InvalidArgument("train_ratio must lie in (0,1)");
  std::vector<std::int64_t> pages;
  for (const auto& a : articles) pages.push_back(a.page_id);
  std::sort(pages.begin(), pages.end());
  pages.erase(std::unique(pages.begin(), pages.end()), pages.end());
  std::mt19937_64 rng(spec.seed);
  std::shuffle(pages.begin(), pages.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(spec.train_ratio * static_cast<double>(pages.size())));
  std::set<std::int64_t> train_pages(pages.begin(), pages.begin() + static_cast<std::ptrdiff_t>(n_train));
  Split split;
  for (const auto& a : articles) {
    (train_pages.contains(a.page_id) ? split.train : split.test).push_back(a);
  }
  return split;
}

/// Chooses (n_pos, n_neg) for a class-ratio sample. With no explicit size, the
/// largest sample that fits the available articles is used; the positive
/// count is round(pos_ratio * size).
inline std::pair<std::size_t, std::size_t> imbalanced_counts(std::size_t available_pos,
                                                             std::size_t available_neg,
                                                             double pos_ratio,
                                                             std::optional<std::size_t> size = {}) {
  if (!(pos_ratio > 0.0 && pos_ratio <= 1.0)) throw InvalidArgument("pos_ratio must lie in (0,1]");
  auto counts = [&](std::size_t n) {
    auto pos = static_cast<std::size_t>(std::llround(pos_ratio * static_cast<double>(n)));
    return std::pair{pos, n - pos};
  };
  if (size) {
    auto [pos, neg] = counts(*size);
    if (pos > available_pos || neg > available_neg)
      throw InfeasibleSampleError("sample of " + std::to_string(*size) + " at pos_ratio " +
                                  std::to_string(pos_ratio) + " needs " + std::to_string(pos) +
                                  " positives and " + std::to_string(neg) + " negatives; have " +
                                  std::to_string(available_pos) + " and " +
                                  std::to_string(available_neg));
    return {pos, neg};
  }
  if (available_pos == 0) throw InfeasibleSampleError("no positive articles available (shortfall: need >= 1)");
  if (available_neg == 0 && pos_ratio < 1.0)
    throw InfeasibleSampleError("no negative articles available (shortfall: need >= 1)");
  for (std::size_t n = available_pos + available_neg; n > 0; --n) {
    auto [pos, neg] = counts(n);
    if (pos >= 1 && pos <= available_pos && neg <= available_neg) return {pos, neg};
  }
  throw InfeasibleSampleError("no feasible sample for pos_ratio " + std::to_string(pos_ratio));
}

/// Samples without replacement to the requested positive fraction, downsampling
/// whichever class is in excess. Output preserves corpus order.
inline std::vector<Article> sample_imbalanced(std::span<const Article> articles, double pos_ratio,
                                              std::uint64_t seed,
                                              std::optional<std::size_t> size = {}) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < articles.size(); ++i) (articles[i].label ? pos : neg).push_back(i);
  auto [n_pos, n_neg] = imbalanced_counts(pos.size(), neg.size(), pos_ratio, size);
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<std::size_t> keep(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
  keep.insert(keep.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
  std::sort(keep.begin(), keep.end());
  std::vector<Article> out;
  out.reserve(keep.size());
  for (auto i : keep) out.push_back(articles[i]);
  return out;
}

struct NliBuildReport {
  std::size_t contradiction = 0;
  std::size_t entailment = 0;
  std::size_t neutral = 0;
  std::size_t dropped = 0;
};

/// Reads SNLI/MNLI-format JSONL ("gold_label", "sentence1", "sentence2") and
/// relabels to binary: contradiction -> 1, entailment and neutral -> 0. Records
/// without a usable gold label are dropped and counted.
inline void read_nli_distribution(std::istream& in, const std::string& source,
                                  std::vector<NLIExample>& out, NliBuildReport& report) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), detail::is_space)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw SchemaError(lineno, source + ": invalid JSON");
    }
    auto text = [&](const char* key) -> std::string {
      auto it = j.find(key);
      return it != j.end() && it->is_string() ? detail::collapse_whitespace(it->get<std::string>())
                                              : std::string{};
    };
    auto gold = text("gold_label");
    auto premise = text("sentence1");
    auto hypothesis = text("sentence2");
    bool known = gold == "contradiction" || gold == "entailment" || gold == "neutral";
    if (!known || premise.empty() || hypothesis.empty()) {
      ++report.dropped;
      continue;
    }
    if (gold == "contradiction") ++report.contradiction;
    else if (gold == "entailment") ++report.entailment;
    else ++report.neutral;
    out.push_back(NLIExample{std::move(premise), std::move(hypothesis), gold == "contradiction" ? 1 : 0});
  }
}

inline std::vector<NLIExample> build_nli(std::span<const std::filesystem::path> paths,
                                         NliBuildReport* report_out = nullptr) {
  std::vector<NLIExample> out;
  NliBuildReport report;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot read NLI file " + p.string());
    read_nli_distribution(in, p.string(), out, report);
  }
  if (out.empty()) throw DataError("no usable NLI examples in input");
  if (report_out) *report_out = report;
  return out;
}

inline std::vector<NLIExample> build_nli(const std::filesystem::path& snli_path,
                                         const std::filesystem::path& mnli_path,
                                         NliBuildReport* report = nullptr) {
  std::vector<std::filesystem::path> paths;
  if (!snli_path.empty()) paths.push_back(snli_path);
  if (!mnli_path.empty()) paths.push_back(mnli_path);
  return build_nli(std::span<const std::filesystem::path>(paths), report);
}

/// Binary NLI JSONL as written by this project: {"premise","hypothesis","label"}.
inline void write_nli(std::ostream& out, std::span<const NLIExample> examples) {
  for (const auto& e : examples)
    out << nlohmann::json{{"premise", e.premise}, {"hypothesis", e.hypothesis}, {"label", e.label}}.dump()
        << '\n';
}

inline std::vector<NLIExample> load_nli(std::istream& in) {
  std::vector<NLIExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), detail::is_space)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw SchemaError(lineno, "invalid JSON");
    }
    if (!j.is_object() || !j.contains("premise") || !j.contains("hypothesis") || !j.contains("label") ||
        !j["premise"].is_string() || !j["hypothesis"].is_string() || !j["label"].is_number_integer())
      throw SchemaError(lineno, "NLI record needs string premise/hypothesis and integer label");
    NLIExample e{detail::collapse_whitespace(j["premise"].get<std::string>()),
                 detail::collapse_whitespace(j["hypothesis"].get<std::string>()), j["label"].get<int>()};
    if (e.premise.empty() || e.hypothesis.empty()) throw SchemaError(lineno, "empty NLI sentence");
    if (e.label != 0 && e.label != 1) throw SchemaError(lineno, "label must be 0 or 1");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<NLIExample> load_nli(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read NLI file " + path.string());
  return load_nli(in);
}

}  // namespace pcnn
