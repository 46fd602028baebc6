// Copyright 2026 The Polyphone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "polyphone/corpus.h"

#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "polyphone/errors.h"
#include "polyphone/utf8.h"

namespace polyphone {
namespace {

Lexicon TestLexicon() {
  std::istringstream in(
      "# test lexicon\n"
      "背\tbei1,bei4\n"
      "将\tjiang1,jiang4\n"
      "得\tde2,dei3,de5\n"
      "我\two3\n");
  return ParseLexicon(in);
}

TEST(Utf8Test, RoundTrip) {
  const std::string s = "我不注重得与失 ü a";
  EXPECT_EQ(EncodeUtf8(DecodeUtf8(s)), s);
  EXPECT_EQ(DecodeUtf8("得").size(), 1u);
  EXPECT_EQ(DecodeUtf8("得")[0], U'得');
}

TEST(Utf8Test, RejectsMalformed) {
  EXPECT_THROW(DecodeUtf8("\xe5\xbe"), FormatError);
  EXPECT_THROW(DecodeUtf8("\xff"), FormatError);
  EXPECT_THROW(DecodeUtf8("\xc0\x80"), FormatError);  // overlong
}

TEST(LexiconTest, Candidates) {
  const Lexicon lex = TestLexicon();
  EXPECT_EQ(lex.CandidatePinyins(U'背'), (std::vector<std::string>{"bei1", "bei4"}));
  EXPECT_EQ(lex.CandidatePinyins(U'将').size(), 2u);
  EXPECT_TRUE(lex.IsPolyphonic(U'将'));
  EXPECT_FALSE(lex.IsPolyphonic(U'我'));
  EXPECT_THROW(lex.Candidates(U'失'), DomainError);
}

TEST(LexiconTest, InventoryIsSortedAndStable) {
  const Lexicon lex = TestLexicon();
  EXPECT_EQ(lex.inventory(), (std::vector<std::string>{"bei1", "bei4", "de2", "de5", "dei3",
                                                       "jiang1", "jiang4", "wo3"}));
  EXPECT_EQ(*lex.ClassOf("dei3"), 4);
  EXPECT_FALSE(lex.ClassOf("xx1").has_value());
  EXPECT_EQ(lex.Pinyin(*lex.ClassOf("jiang4")), "jiang4");
}

TEST(LexiconTest, Errors) {
  std::istringstream dup("背\tbei1\n背\tbei4\n");
  EXPECT_THROW(ParseLexicon(dup), FormatError);
  std::istringstream empty("背\t\n");
  EXPECT_THROW(ParseLexicon(empty), FormatError);
  std::istringstream bad_pinyin("背\tbei\n");
  EXPECT_THROW(ParseLexicon(bad_pinyin), FormatError);
  std::istringstream two_chars("背将\tbei1\n");
  EXPECT_THROW(ParseLexicon(two_chars), FormatError);
}

TEST(PinyinTest, Validity) {
  EXPECT_TRUE(IsValidPinyin("lü4"));
  EXPECT_TRUE(IsValidPinyin("de5"));
  EXPECT_FALSE(IsValidPinyin("de6"));
  EXPECT_FALSE(IsValidPinyin("De2"));
  EXPECT_FALSE(IsValidPinyin("2"));
}

TEST(CorpusTest, ParsesAnnotatedSentences) {
  const Lexicon lex = TestLexicon();
  std::istringstream in(
      R"({"text":"我不注重得与失","index":4,"pinyin":"de2"})"
      "\n\n"
      R"({"text":"我得关注相关动态","index":1,"pinyin":"dei3","word":[1,2]})"
      "\n");
  const auto samples = ParseCorpus(in, lex);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0].target_char(), U'得');
  EXPECT_EQ(samples[0].gold, *lex.ClassOf("de2"));
  EXPECT_FALSE(samples[0].word_span.has_value());
  EXPECT_EQ(samples[1].gold, *lex.ClassOf("dei3"));
  EXPECT_EQ(samples[1].word_span, (Span{1, 2}));
}

int AnnotationLine(const std::string &text) {
  const Lexicon lex = TestLexicon();
  std::istringstream in(text);
  try {
    ParseCorpus(in, lex);
  } catch (const AnnotationError &e) {
    return e.line();
  }
  return -1;
}

TEST(CorpusTest, AnnotationErrorsCarryLineNumbers) {
  const std::string good = R"({"text":"得","index":0,"pinyin":"de2"})" "\n";
  EXPECT_EQ(AnnotationLine(good + R"({"text":"我得","index":2,"pinyin":"de2"})"), 2);
  EXPECT_EQ(AnnotationLine(good + good + R"({"text":"我得","index":1,"pinyin":"bei1"})"), 3);
  EXPECT_EQ(AnnotationLine(R"({"text":"我得","index":0,"pinyin":"wo3"})"), 1);  // monophonic
  EXPECT_EQ(AnnotationLine(R"({"text":"失得","index":0,"pinyin":"de2"})"), 1);  // not in lexicon
  EXPECT_EQ(AnnotationLine(R"({"text":"我得","index":1,"pinyin":"de2","word":[0,1]})"), 1);
  EXPECT_EQ(AnnotationLine(R"({"text":"我得","index":-1,"pinyin":"de2"})"), 1);
}

TEST(CorpusTest, MalformedJsonIsFormatError) {
  const Lexicon lex = TestLexicon();
  std::istringstream in("{\"text\":\n");
  EXPECT_THROW(ParseCorpus(in, lex), Error);
}

TEST(CorpusTest, WriteThenParse) {
  const Lexicon lex = TestLexicon();
  std::vector<Sample> samples{{DecodeUtf8("我得走"), 1, Span{1, 3}, *lex.ClassOf("dei3")},
                              {DecodeUtf8("背包"), 0, std::nullopt, *lex.ClassOf("bei1")}};
  std::ostringstream out;
  WriteCorpus(out, samples, lex);
  std::istringstream in(out.str());
  EXPECT_EQ(ParseCorpus(in, lex), samples);
}

std::vector<Sample> PairSamples(const Lexicon &lex, const std::map<std::string, int> &counts) {
  std::vector<Sample> out;
  for (const auto &[pinyin, n] : counts) {
    const char32_t c = pinyin.starts_with("bei") ? U'背' : pinyin.starts_with("d") ? U'得' : U'将';
    for (int i = 0; i < n; ++i) {
      out.push_back({std::u32string(1, c) + std::u32string(i % 5 + 1, U'我'), 0, std::nullopt,
                     *lex.ClassOf(pinyin)});
    }
  }
  return out;
}

TEST(SplitTest, EvalCounts) {
  const SplitRule rule;
  EXPECT_EQ(EvalCountForPair(100, rule), 7);
  EXPECT_EQ(EvalCountForPair(15, rule), 1);
  EXPECT_EQ(EvalCountForPair(14, rule), 3);
  EXPECT_EQ(EvalCountForPair(10, rule), 2);
  EXPECT_EQ(EvalCountForPair(1, rule), 0);
  EXPECT_EQ(EvalCountForPair(0, rule), 0);
}

TEST(SplitTest, PerPairCounts) {
  const Lexicon lex = TestLexicon();
  const auto samples = PairSamples(lex, {{"bei1", 100}, {"bei4", 10}, {"de2", 1}});
  const Split split = SplitDataset(samples, SplitRule{}, 3);
  std::map<int, int> eval_counts;
  for (const auto &s : split.eval) ++eval_counts[s.gold];
  EXPECT_EQ(eval_counts[*lex.ClassOf("bei1")], 7);
  EXPECT_EQ(eval_counts[*lex.ClassOf("bei4")], 2);
  EXPECT_EQ(eval_counts[*lex.ClassOf("de2")], 0);
  EXPECT_EQ(split.train.size() + split.eval.size(), samples.size());
}

TEST(SplitTest, SeedDeterminesSplit) {
  const Lexicon lex = TestLexicon();
  const auto samples = PairSamples(lex, {{"bei1", 40}, {"jiang1", 30}});
  EXPECT_EQ(SplitDataset(samples, SplitRule{}, 5).eval, SplitDataset(samples, SplitRule{}, 5).eval);
  EXPECT_NE(SplitDataset(samples, SplitRule{}, 5).eval, SplitDataset(samples, SplitRule{}, 6).eval);
}

TEST(SplitTest, InvalidRule) {
  SplitRule rule;
  rule.eval_fraction_major = 1.5;
  EXPECT_THROW(rule.Validate(), ConfigError);
}

EncodedSample Encoded(std::vector<int32_t> ids) {
  EncodedSample e;
  e.char_ids = std::move(ids);
  return e;
}

TEST(BatchTest, PadsToLongest) {
  const std::vector<EncodedSample> s{Encoded({2, 3, 4, 5, 6}), Encoded({2, 3, 4, 5, 6, 7, 8, 9, 10})};
  const auto batches = MakeBatches(s, 2, 0, 1, false);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].char_ids.rows, 2);
  EXPECT_EQ(batches[0].char_ids.cols, 9);
  int pads = 0;
  for (int c = 0; c < 9; ++c) pads += batches[0].char_ids.at(0, c) == 0;
  EXPECT_EQ(pads, 4);
  EXPECT_EQ(batches[0].lengths, (std::vector<int>{5, 9}));
}

TEST(BatchTest, EqualLengthsHaveNoPadding) {
  const std::vector<EncodedSample> s(3, Encoded({4, 5, 6}));
  for (const auto &b : MakeBatches(s, 2, 0, 1, true)) {
    for (int32_t id : b.char_ids.ids) EXPECT_NE(id, 0);
  }
}

TEST(BatchTest, RemainderBatch) {
  const std::vector<EncodedSample> s(10, Encoded({2}));
  std::vector<int64_t> sizes;
  for (const auto &b : MakeBatches(s, 4, 0, 1, true)) sizes.push_back(b.size());
  EXPECT_EQ(sizes, (std::vector<int64_t>{4, 4, 2}));
  EXPECT_TRUE(MakeBatches({}, 4, 0, 1, true).empty());
}

TEST(BatchTest, ShuffleIsSeededPermutation) {
  std::vector<EncodedSample> s;
  for (int i = 0; i < 20; ++i) s.push_back(Encoded({i + 2}));
  auto order = [&](uint64_t seed) {
    std::vector<int32_t> ids;
    for (const auto &b : MakeBatches(s, 3, 0, seed, true)) {
      ids.insert(ids.end(), b.char_ids.ids.begin(), b.char_ids.ids.end());
    }
    return ids;
  };
  EXPECT_EQ(order(4), order(4));
  EXPECT_NE(order(4), order(5));
  auto sorted = order(4);
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sorted[i], i + 2);
}

TEST(BatchTest, RejectsBadBatchSize) {
  const std::vector<EncodedSample> s(3, Encoded({4}));
  EXPECT_THROW(MakeBatches(s, 0, 0, 1, false), ConfigError);
}

}  // namespace
}  // namespace polyphone
