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

// Synthetic biography corpora with planted contradictions. Each page is a
// short biography of one person built from fact templates (entity, attribute,
// value) and attribute-free filler. A contradictory revision states one
// attribute twice with different values; its resolved revision restates the
// same value instead.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcnn/common.hpp"
#include "pcnn/corpus.hpp"
#include "pcnn/pcl.hpp"

namespace pcnn {

struct FactTemplate {
  std::string attribute;
  std::vector<std::string> phrasings;  // contain "{E}" and "{V}"
  std::vector<std::string> values;
};

struct IntRange {
  int lo = 1;
  int hi = 1;
};

struct SynthSpec {
  int n_articles = 200;
  double pos_fraction = 0.5;
  IntRange paragraphs_per_article{3, 4};
  IntRange sentences_per_paragraph{3, 6};
  std::uint64_t seed = 7;
  std::vector<FactTemplate> templates;
  /// Place the two planted sentences in different paragraphs.
  bool cross_paragraph = false;
  /// Probability that a free slot carries a fact rather than filler.
  double fact_rate = 0.5;

  void validate() const {
    if (n_articles < 0) throw ConfigError("synth.n_articles must be non-negative");
    if (!(pos_fraction >= 0.0 && pos_fraction <= 1.0)) throw ConfigError("synth.pos_fraction must lie in [0,1]");
    if (paragraphs_per_article.lo < 1 || paragraphs_per_article.hi < paragraphs_per_article.lo)
      throw ConfigError("synth paragraph range is empty");
    if (sentences_per_paragraph.lo < 1 || sentences_per_paragraph.hi < sentences_per_paragraph.lo)
      throw ConfigError("synth sentence range is empty");
    if (templates.empty()) throw ConfigError("synth needs at least one fact template");
    for (const auto& t : templates) {
      std::set<std::string> distinct(t.values.begin(), t.values.end());
      if (distinct.size() < 2) throw ConfigError("template '" + t.attribute + "' needs >= 2 distinct values");
      if (t.phrasings.empty()) throw ConfigError("template '" + t.attribute + "' has no phrasing");
    }
  }
};

inline std::vector<FactTemplate> default_fact_templates() {
  return {
      {"birthplace",
       {"{E} was born in {V}, Washington.", "The birthplace of {E} is {V}, Washington."},
       {"Lakewood", "Renton", "Tacoma", "Olympia", "Spokane", "Yakima", "Everett", "Bellingham"}},
      {"birth_year",
       {"{E} was born in the year {V}.", "According to census records, {E} entered the world in {V}."},
       {"1921", "1934", "1948", "1952", "1967", "1973", "1985", "1990"}},
      {"occupation",
       {"{E} worked as a {V} for most of their career.", "By profession, {E} was a {V}."},
       {"carpenter", "physician", "teacher", "journalist", "architect", "pharmacist", "surveyor", "chemist"}},
      {"spouse",
       {"{E} was married to {V}.", "The spouse of {E} was {V}."},
       {"Margaret Hale", "Eleanor Voss", "Dorothy Quinn", "Lillian Park", "Harriet Cole", "Beatrice Lowe",
        "Vivian Shaw", "Josephine Reed"}},
      {"school",
       {"{E} graduated from {V}.", "{E} received a degree from {V}."},
       {"Whitman College", "Reed College", "Gonzaga University", "Evergreen College", "Linfield College",
        "Pacific Lutheran University", "Walla Walla University", "Seattle Pacific University"}},
      {"team",
       {"{E} played for the {V}.", "{E} was a member of the {V} roster."},
       {"Mariners", "Seahawks", "Sonics", "Sounders", "Storm", "Kraken", "Rainiers", "Pilots"}},
      {"death_place",
       {"{E} died in {V}.", "{E} passed away in {V}."},
       {"Boston", "Denver", "Portland", "Chicago", "Phoenix", "Austin", "Omaha", "Tulsa"}},
  };
}

inline SynthSpec default_synth_spec() {
  SynthSpec s;
  s.templates = default_fact_templates();
  return s;
}

/// Ground truth for one generated revision. `planted` is empty for
/// non-contradictory revisions.
struct PlantedRecord {
  std::int64_t page_id = 0;
  std::int64_t rev_id = 0;
  std::vector<PairId> planted;
};

struct SynthCorpus {
  std::vector<Article> articles;
  std::vector<PlantedRecord> planted;  // parallel to articles

  const PlantedRecord* planted_for(const Article& a) const {
    for (const auto& p : planted)
      if (p.page_id == a.page_id && p.rev_id == a.rev_id) return &p;
    return nullptr;
  }
};

namespace detail {

inline const std::vector<std::string>& kFirstNames() {
  static const std::vector<std::string> v = {
      "Harold", "Agnes",  "Walter", "Edith",   "Clarence", "Mabel",  "Virgil", "Opal",   "Chester", "Myrtle",
      "Lloyd",  "Hazel",  "Elmer",  "Gladys",  "Rudolph",  "Irene",  "Cyrus",  "Ruby",   "Homer",   "Viola"};
  return v;
}
inline const std::vector<std::string>& kLastNames() {
  static const std::vector<std::string> v = {
      "Jensen", "Okafor",  "Lindqvist", "Brennan", "Takahashi", "Moreau",  "Castellano", "Whitfield", "Dvorak",
      "Halvorsen", "Pruitt", "Marchetti", "Abernathy", "Kowalski", "Fairbanks", "Ostrander", "Delacroix",
      "Winslow", "Ashcroft", "Vasquez"};
  return v;
}

struct FillerVocab {
  std::vector<std::string> frames;  // "{A}", "{B}", "{C}", "{D}" slots
  std::vector<std::string> a, b, c, d;
};

inline const FillerVocab& filler_vocab() {
  static const FillerVocab v{
      {"The {A} near the {B} is known for its {C}.", "Local historians describe the {A} as remarkably {D}.",
       "Several {C} were added to the {B} during the renovation.",
       "Visitors often mention the {D} {A} along the {B}.",
       "The {D} festival celebrating the {C} takes place each summer."},
      {"river", "harbor", "valley", "bridge", "market", "meadow", "garden", "square"},
      {"mill", "station", "plaza", "pier", "orchard", "quarry", "canal", "cathedral"},
      {"murals", "fountains", "lanterns", "vineyards", "sculptures", "gardens", "bells", "mosaics"},
      {"quiet", "colorful", "ancient", "busy", "peaceful", "rugged", "elegant", "modest"}};
  return v;
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

inline int uniform_int(int lo, int hi, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(rng);
}

inline std::string filler_sentence(std::mt19937_64& rng) {
  const auto& v = filler_vocab();
  std::string s = pick(v.frames, rng);
  s = replace_all(s, "{A}", pick(v.a, rng));
  s = replace_all(s, "{B}", pick(v.b, rng));
  s = replace_all(s, "{C}", pick(v.c, rng));
  s = replace_all(s, "{D}", pick(v.d, rng));
  return s;
}

inline std::string fact_sentence(const FactTemplate& t, std::size_t phrasing, const std::string& entity,
                                 const std::string& value) {
  std::string s = replace_all(t.phrasings[phrasing], "{E}", entity);
  s = replace_all(s, "{V}", value);
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

struct Slot {
  std::string text;
  int attribute = -1;  // -1 for filler
  std::string value;
};

/// Two distinct values of one attribute.
inline std::pair<std::string, std::string> two_values(const FactTemplate& t, std::mt19937_64& rng) {
  std::vector<std::string> distinct(t.values.begin(), t.values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::shuffle(distinct.begin(), distinct.end(), rng);
  return {distinct[0], distinct[1]};
}

}  // namespace detail

/// Generates the corpus. round(n * pos_fraction) articles are contradictory.
/// Positive and negative revisions are paired on one page where possible; any
/// surplus of one class gets single-revision pages.
inline SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, "synth/articles"));
  const int n_pos = static_cast<int>(std::llround(spec.pos_fraction * spec.n_articles));
  const int n_neg = spec.n_articles - n_pos;
  const int n_pairs = std::min(n_pos, n_neg);
  const int n_pages = n_pairs + (n_pos - n_pairs) + (n_neg - n_pairs);

  std::vector<std::string> entities;
  for (const auto& f : detail::kFirstNames())
    for (const auto& l : detail::kLastNames()) entities.push_back(f + " " + l);
  std::shuffle(entities.begin(), entities.end(), rng);

  SynthCorpus out;
  for (int page = 0; page < n_pages; ++page) {
    const bool emit_pos = page < n_pairs || page < n_pairs + (n_pos - n_pairs);
    const bool emit_neg = page < n_pairs || page >= n_pairs + (n_pos - n_pairs);
    const std::int64_t page_id = 1000 + page;
    const std::string entity = entities[static_cast<std::size_t>(page) % entities.size()];

    // Layout.
    int n_paras = detail::uniform_int(spec.paragraphs_per_article.lo, spec.paragraphs_per_article.hi, rng);
    if (spec.cross_paragraph) n_paras = std::max(n_paras, 2);
    std::vector<int> sizes;
    for (int p = 0; p < n_paras; ++p)
      sizes.push_back(detail::uniform_int(spec.sentences_per_paragraph.lo, spec.sentences_per_paragraph.hi, rng));

    // Planted slots: (paragraph, position) for the first and second statement.
    std::pair<int, int> first, second;
    if (spec.cross_paragraph) {
      int p1 = detail::uniform_int(0, n_paras - 1, rng);
      int p2 = detail::uniform_int(0, n_paras - 2, rng);
      if (p2 >= p1) ++p2;
      if (p1 > p2) std::swap(p1, p2);
      first = {p1, detail::uniform_int(0, sizes[p1] - 1, rng)};
      second = {p2, detail::uniform_int(0, sizes[p2] - 1, rng)};
    } else {
      std::vector<int> eligible;
      for (int p = 0; p < n_paras; ++p)
        if (sizes[p] >= 2) eligible.push_back(p);
      if (eligible.empty()) {
        sizes[0] = 2;
        eligible.push_back(0);
      }
      const int p = detail::pick(eligible, rng);
      int a = detail::uniform_int(0, sizes[p] - 1, rng);
      int b = detail::uniform_int(0, sizes[p] - 2, rng);
      if (b >= a) ++b;
      if (a > b) std::swap(a, b);
      first = {p, a};
      second = {p, b};
    }

    const int attr = detail::uniform_int(0, static_cast<int>(spec.templates.size()) - 1, rng);
    const auto& tmpl = spec.templates[static_cast<std::size_t>(attr)];
    const auto [v1, v2] = detail::two_values(tmpl, rng);
    const auto ph1 = static_cast<std::size_t>(detail::uniform_int(0, static_cast<int>(tmpl.phrasings.size()) - 1, rng));
    const auto ph2 = static_cast<std::size_t>(detail::uniform_int(0, static_cast<int>(tmpl.phrasings.size()) - 1, rng));

    // Remaining slots: facts about attributes not used elsewhere, or filler.
    std::vector<int> free_attrs;
    for (int a = 0; a < static_cast<int>(spec.templates.size()); ++a)
      if (a != attr) free_attrs.push_back(a);
    std::shuffle(free_attrs.begin(), free_attrs.end(), rng);
    std::bernoulli_distribution use_fact(spec.fact_rate);
    std::vector<std::vector<detail::Slot>> body(static_cast<std::size_t>(n_paras));
    for (int p = 0; p < n_paras; ++p) {
      for (int s = 0; s < sizes[p]; ++s) {
        detail::Slot slot;
        if (std::pair{p, s} == first) {
          slot = {detail::fact_sentence(tmpl, ph1, entity, v1), attr, v1};
        } else if (std::pair{p, s} == second) {
          slot = {"", attr, ""};  // filled per revision below
        } else if (!free_attrs.empty() && use_fact(rng)) {
          const int a = free_attrs.back();
          free_attrs.pop_back();
          const auto& t = spec.templates[static_cast<std::size_t>(a)];
          const auto& v = detail::pick(t.values, rng);
          const auto ph = static_cast<std::size_t>(detail::uniform_int(0, static_cast<int>(t.phrasings.size()) - 1, rng));
          slot = {detail::fact_sentence(t, ph, entity, v), a, v};
        } else {
          slot = {detail::filler_sentence(rng), -1, ""};
        }
        body[static_cast<std::size_t>(p)].push_back(std::move(slot));
      }
    }

    auto emit = [&](int label, std::int64_t rev_id) {
      const std::string& second_value = label ? v2 : v1;
      auto& b2 = body[static_cast<std::size_t>(second.first)][static_cast<std::size_t>(second.second)];
      b2 = {detail::fact_sentence(tmpl, ph2, entity, second_value), attr, second_value};

      // Label soundness: a clean revision never states two values of one attribute.
      std::map<int, std::set<std::string>> stated;
      for (const auto& para : body)
        for (const auto& s : para)
          if (s.attribute >= 0) stated[s.attribute].insert(s.value);
      for (const auto& [a, values] : stated) {
        const bool conflict = values.size() > 1;
        if (conflict != (label == 1 && a == attr))
          throw RuntimeFailure("synthgen: label soundness violated for page " + std::to_string(page_id));
      }

      std::vector<std::vector<std::string>> text;
      for (const auto& para : body) {
        auto& t = text.emplace_back();
        for (const auto& s : para) t.push_back(s.text);
      }
      Article a = make_article(page_id, rev_id, entity, label, text);
      PlantedRecord rec{page_id, rev_id, {}};
      if (label) {
        int offset_first = 0, offset_second = 0;
        for (int p = 0; p < first.first; ++p) offset_first += sizes[static_cast<std::size_t>(p)];
        for (int p = 0; p < second.first; ++p) offset_second += sizes[static_cast<std::size_t>(p)];
        PairId id{first.first, offset_first + first.second, second.first, offset_second + second.second};
        if (!spec.cross_paragraph && id.para_i != id.para_j)
          throw RuntimeFailure("synthgen: planted pair is not within one paragraph");
        rec.planted.push_back(id);
      }
      out.articles.push_back(std::move(a));
      out.planted.push_back(std::move(rec));
    };

    // Tagged revision first, resolved revision later.
    if (emit_pos) emit(1, 10 * page_id + 1);
    if (emit_neg) emit(0, 10 * page_id + 2);
  }
  return out;
}

/// Balanced binary NLI pairs from the same templates: contradictions state two
/// values of one attribute; non-contradictions are half consistent
/// restatements and half unrelated statements.
inline std::vector<NLIExample> generate_nli(const SynthSpec& spec, int n_examples) {
  spec.validate();
  if (n_examples < 0) throw ConfigError("generate_nli: negative example count");
  std::mt19937_64 rng(derive_seed(spec.seed, "synth/nli"));
  const int n_pos = n_examples / 2;
  const int n_neg = n_examples - n_pos;
  std::vector<std::string> entities;
  for (const auto& f : detail::kFirstNames())
    for (const auto& l : detail::kLastNames()) entities.push_back(f + " " + l);
  const auto n_tmpl = static_cast<int>(spec.templates.size());
  auto phrasing = [&](const FactTemplate& t) {
    return static_cast<std::size_t>(detail::uniform_int(0, static_cast<int>(t.phrasings.size()) - 1, rng));
  };

  std::vector<NLIExample> out;
  for (int i = 0; i < n_pos; ++i) {
    const auto& e = detail::pick(entities, rng);
    const auto& t = spec.templates[static_cast<std::size_t>(detail::uniform_int(0, n_tmpl - 1, rng))];
    auto [v1, v2] = detail::two_values(t, rng);
    out.push_back({detail::fact_sentence(t, phrasing(t), e, v1), detail::fact_sentence(t, phrasing(t), e, v2), 1});
  }
  for (int i = 0; i < n_neg; ++i) {
    const auto& e = detail::pick(entities, rng);
    const int a = detail::uniform_int(0, n_tmpl - 1, rng);
    const auto& t = spec.templates[static_cast<std::size_t>(a)];
    const auto& v = detail::pick(t.values, rng);
    std::string premise = detail::fact_sentence(t, phrasing(t), e, v);
    std::string hypothesis;
    if (i % 2 == 0) {
      hypothesis = detail::fact_sentence(t, phrasing(t), e, v);
    } else if (n_tmpl > 1 && i % 4 == 1) {
      int b = detail::uniform_int(0, n_tmpl - 2, rng);
      if (b >= a) ++b;
      const auto& u = spec.templates[static_cast<std::size_t>(b)];
      hypothesis = detail::fact_sentence(u, phrasing(u), e, detail::pick(u.values, rng));
    } else {
      hypothesis = detail::filler_sentence(rng);
    }
    if (detail::uniform_int(0, 1, rng)) std::swap(premise, hypothesis);
    out.push_back({std::move(premise), std::move(hypothesis), 0});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline nlohmann::json planted_to_json(const PlantedRecord& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.planted)
    pairs.push_back(nlohmann::json::array({nlohmann::json::array({p.para_i, p.sent_i}),
                                           nlohmann::json::array({p.para_j, p.sent_j})}));
  return {{"page_id", r.page_id}, {"rev_id", r.rev_id}, {"planted", pairs}};
}

inline PlantedRecord planted_from_json(const nlohmann::json& j) {
  PlantedRecord r{j.at("page_id").get<std::int64_t>(), j.at("rev_id").get<std::int64_t>(), {}};
  for (const auto& p : j.at("planted"))
    r.planted.push_back({p.at(0).at(0).get<int>(), p.at(0).at(1).get<int>(), p.at(1).at(0).get<int>(),
                         p.at(1).at(1).get<int>()});
  return r;
}

inline void write_planted(std::ostream& out, const std::vector<PlantedRecord>& records) {
  for (const auto& r : records) out << planted_to_json(r).dump() << '\n';
}

inline std::vector<PlantedRecord> load_planted(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read ground-truth file " + path.string());
  std::vector<PlantedRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(planted_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(lineno, std::string("ground-truth record: ") + e.what());
    }
  }
  return out;
}

}  // namespace pcnn
