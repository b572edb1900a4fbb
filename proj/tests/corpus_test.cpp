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

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pcnn/corpus.hpp"
#include "test_util.hpp"

namespace pcnn {
namespace {

using testing::data_path;
using testing::read_file;

std::vector<std::vector<std::string>> texts(const std::vector<Paragraph>& ps) {
  std::vector<std::vector<std::string>> out;
  for (const auto& p : ps) {
    auto& o = out.emplace_back();
    for (const auto& s : p) o.push_back(s.text);
  }
  return out;
}

TEST(Segment, BlankLineSeparatesParagraphs) {
  auto ps = segment("A. B.\n\nC.");
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(texts(ps), (std::vector<std::vector<std::string>>{{"A.", "B."}, {"C."}}));
  EXPECT_EQ(ps[1][0].sent_id, 2);
  EXPECT_EQ(ps[1][0].para_idx, 1);
}

TEST(Segment, EmptyInputIsAnError) {
  EXPECT_THROW(segment(""), EmptyInputError);
  EXPECT_THROW(segment(" \n\n\t\n"), EmptyInputError);
}

TEST(Segment, HandSegmentedFixtureWithAbbreviations) {
  auto ps = segment(read_file(data_path("segment_fixture.txt")));
  auto expected = nlohmann::json::parse(read_file(data_path("segment_expected.json")))
                      .get<std::vector<std::vector<std::string>>>();
  EXPECT_EQ(texts(ps), expected);
  std::size_t n = 0;
  for (const auto& p : ps) n += p.size();
  EXPECT_EQ(n, 9u);
}

TEST(Segment, SentenceIdsAreDocumentOrder) {
  auto ps = segment("One here. Two here.\n\nThree here! Four here?\n\nFive.");
  int expect = 0;
  for (std::size_t p = 0; p < ps.size(); ++p)
    for (const auto& s : ps[p]) {
      EXPECT_EQ(s.sent_id, expect++);
      EXPECT_EQ(s.para_idx, static_cast<int>(p));
    }
  EXPECT_EQ(expect, 5);
}

TEST(Segment, NoSplitBeforeLowercase) {
  auto ps = segment("It cost approx. five dollars. Then it rose.");
  ASSERT_EQ(ps[0].size(), 2u);
  EXPECT_EQ(ps[0][0].text, "It cost approx. five dollars.");
}

TEST(LoadCorpus, ValidFixture) {
  auto c = load_corpus(data_path("corpus_valid.jsonl"));
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0].page_id, 1);
  EXPECT_EQ(c[0].label, 1);
  EXPECT_EQ(c[0].paragraphs.size(), 2u);
  EXPECT_EQ(c[0].paragraphs[1][0].sent_id, 2);
  EXPECT_EQ(c[3].rev_id, 22);
}

TEST(LoadCorpus, BadLabelNamesLine) {
  try {
    load_corpus(data_path("corpus_bad_label.jsonl"));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, RejectsMalformedRecords) {
  auto load = [](const std::string& s) {
    std::istringstream in(s);
    return load_corpus(in);
  };
  EXPECT_THROW(load("{not json}\n"), SchemaError);
  EXPECT_THROW(load(R"({"page_id":1,"rev_id":1,"title":"x","label":0})"), SchemaError);
  EXPECT_THROW(load(R"({"page_id":1,"rev_id":1,"title":"x","label":0,"paragraphs":[[]]})"), SchemaError);
  EXPECT_THROW(load(R"({"page_id":1,"rev_id":1,"title":"x","label":0,"paragraphs":[["  "]]})"), SchemaError);
  const std::string rec = R"({"page_id":1,"rev_id":1,"title":"x","label":0,"paragraphs":[["a."]]})";
  EXPECT_THROW(load(rec + "\n" + rec + "\n"), SchemaError);
}

TEST(LoadCorpus, CommittedSyntheticCorpus) {
  auto c = load_corpus(data_path("synthetic_corpus.jsonl"));
  ASSERT_EQ(c.size(), 200u);
  int pos = 0;
  for (const auto& a : c) pos += a.label;
  EXPECT_EQ(pos, 100);
}

TEST(LoadCorpus, WriteRoundTrip) {
  auto c = load_corpus(data_path("corpus_valid.jsonl"));
  std::stringstream ss;
  write_corpus(ss, c);
  EXPECT_EQ(load_corpus(ss), c);
}

std::vector<Article> pages(int n_pages) {
  std::vector<Article> out;
  for (int p = 0; p < n_pages; ++p) {
    out.push_back(testing::sized_article({2}, 100 + p, 1));
    out.back().rev_id = 1;
    out.push_back(testing::sized_article({2}, 100 + p, 0));
    out.back().rev_id = 2;
  }
  return out;
}

std::set<std::int64_t> page_set(const std::vector<Article>& as) {
  std::set<std::int64_t> s;
  for (const auto& a : as) s.insert(a.page_id);
  return s;
}

TEST(Split, TwoPagesHalfRatio) {
  auto c = pages(2);
  auto s = split_train_test(c, {0.5, 3, {}});
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_EQ(page_set(s.train).size(), 1u);
  EXPECT_EQ(page_set(s.test).size(), 1u);
}

TEST(Split, TenPagesNoLeak) {
  auto c = pages(10);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = split_train_test(c, {0.8, seed, {}});
    auto tr = page_set(s.train), te = page_set(s.test);
    EXPECT_EQ(tr.size(), 8u);
    EXPECT_EQ(te.size(), 2u);
    for (auto p : te) EXPECT_FALSE(tr.contains(p));
    EXPECT_EQ(s.train.size() + s.test.size(), c.size());
  }
}

TEST(Split, Deterministic) {
  auto c = pages(10);
  auto a = split_train_test(c, {0.8, 42, {}});
  auto b = split_train_test(c, {0.8, 42, {}});
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, RatioOutOfRange) {
  auto c = pages(2);
  EXPECT_THROW(split_train_test(c, {0.0, 1, {}}), InvalidArgument);
  EXPECT_THROW(split_train_test(c, {1.0, 1, {}}), InvalidArgument);
}

std::vector<Article> labeled(int pos, int neg) {
  std::vector<Article> out;
  for (int i = 0; i < pos; ++i) out.push_back(testing::sized_article({1}, i, 1));
  for (int i = 0; i < neg; ++i) out.push_back(testing::sized_article({1}, 1000 + i, 0));
  return out;
}

std::pair<int, int> count(const std::vector<Article>& as) {
  int p = 0;
  for (const auto& a : as) p += a.label;
  return {p, static_cast<int>(as.size()) - p};
}

TEST(SampleImbalanced, IdentityRatio) {
  auto s = sample_imbalanced(labeled(100, 100), 0.5, 1);
  EXPECT_EQ(count(s), std::make_pair(100, 100));
}

TEST(SampleImbalanced, TenPercentUsesLargestFeasibleSample) {
  // Rounding rule: the largest N with round(r*N) <= #pos and N - round(r*N) <= #neg.
  auto s = sample_imbalanced(labeled(100, 100), 0.1, 1);
  EXPECT_EQ(count(s), std::make_pair(11, 100));
  // With an explicit size of 100 the split is 10/90.
  auto fixed = sample_imbalanced(labeled(100, 100), 0.1, 1, 100);
  EXPECT_EQ(count(fixed), std::make_pair(10, 90));
}

TEST(SampleImbalanced, DownsamplesMajority) {
  auto s = sample_imbalanced(labeled(5, 100), 0.5, 9);
  EXPECT_EQ(count(s), std::make_pair(5, 5));
}

TEST(SampleImbalanced, NoReplacementAndCorpusOrder) {
  auto corpus = labeled(30, 70);
  auto s = sample_imbalanced(corpus, 0.3, 4);
  std::set<std::int64_t> ids;
  for (const auto& a : s) ids.insert(a.page_id);
  EXPECT_EQ(ids.size(), s.size());
  auto pos_in_corpus = [&](const Article& a) {
    return std::find(corpus.begin(), corpus.end(), a) - corpus.begin();
  };
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(pos_in_corpus(s[i - 1]), pos_in_corpus(s[i]));
}

TEST(SampleImbalanced, InfeasibleNamesShortfall) {
  try {
    sample_imbalanced(labeled(5, 100), 0.5, 1, 50);
    FAIL();
  } catch (const InfeasibleSampleError& e) {
    EXPECT_NE(std::string(e.what()).find("25 positives"), std::string::npos) << e.what();
  }
  EXPECT_THROW(sample_imbalanced(labeled(0, 10), 0.5, 1), InfeasibleSampleError);
}

TEST(BuildNli, RelabelsAndDrops) {
  NliBuildReport report;
  auto ex = build_nli(data_path("snli_mini.jsonl"), data_path("mnli_mini.jsonl"), &report);
  ASSERT_EQ(ex.size(), 6u);
  EXPECT_EQ(ex[0].label, 1);
  EXPECT_EQ(ex[0].premise, "A man is sleeping.");
  EXPECT_EQ(ex[1].label, 0);  // entailment
  EXPECT_EQ(ex[2].label, 0);  // neutral
  EXPECT_EQ(report.contradiction, 3u);
  EXPECT_EQ(report.entailment, 2u);
  EXPECT_EQ(report.neutral, 1u);
  EXPECT_EQ(report.dropped, 3u);
}

TEST(BuildNli, Errors) {
  EXPECT_THROW(build_nli(data_path("does_not_exist.jsonl"), {}), DataError);
  auto dir = testing::scratch_dir("nli_empty");
  std::ofstream(dir / "e.jsonl") << R"({"gold_label": "-", "sentence1": "a", "sentence2": "b"})" << "\n";
  EXPECT_THROW(build_nli(dir / "e.jsonl", {}), DataError);
}

TEST(BuildNli, BinaryFormatRoundTrip) {
  auto ex = build_nli(data_path("snli_mini.jsonl"), {});
  std::stringstream ss;
  write_nli(ss, ex);
  EXPECT_EQ(load_nli(ss), ex);
}

}  // namespace
}  // namespace pcnn
