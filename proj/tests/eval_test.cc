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

#include "polyphone/eval.h"

#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "polyphone/errors.h"
#include "polyphone/rng.h"
#include "polyphone/utf8.h"

namespace polyphone {
namespace {

Lexicon TestLexicon() {
  std::istringstream in("背\tbei1,bei4\n传\tchuan2,zhuan4\n得\tde2,dei3\n");
  return ParseLexicon(in);
}

Sample S(const Lexicon &lex, const char *text, int index, const char *pinyin) {
  return {DecodeUtf8(text), index, std::nullopt, *lex.ClassOf(pinyin)};
}

EncodedSample E(char32_t c, int gold) {
  EncodedSample e;
  e.char_ids = {2};
  e.target_char = c;
  e.gold = gold;
  return e;
}

TEST(EvalReportTest, PerfectPredictions) {
  const std::vector<EncodedSample> samples{E(U'背', 0), E(U'背', 1), E(U'得', 3)};
  const std::vector<int> preds{0, 1, 3};
  const std::vector<std::string> pinyins{"bei1", "bei4", "de2", "dei3"};
  const EvalReport r = BuildEvalReport(samples, preds, pinyins);
  EXPECT_EQ(r.overall_accuracy, 1.0);
  EXPECT_EQ(r.total, 3);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].character, U'得');  // codepoint order: 得 U+5F97 < 背 U+80CC
  EXPECT_EQ(r.rows[1].count, 2);
}

TEST(EvalReportTest, MajorityColumnsAndPartition) {
  std::vector<EncodedSample> samples;
  for (int i = 0; i < 31; ++i) samples.push_back(E(U'传', 0));
  for (int i = 0; i < 5; ++i) samples.push_back(E(U'传', 1));
  samples.push_back(E(U'得', 2));
  std::vector<int> preds(samples.size(), 0);
  const std::vector<std::string> pinyins{"chuan2", "zhuan4", "de2"};
  const EvalReport r = BuildEvalReport(samples, preds, pinyins);
  const auto &row = r.rows[0];
  EXPECT_EQ(row.high_freq_pinyin, "chuan2");
  EXPECT_EQ(row.low_freq_pinyins, (std::vector<std::string>{"zhuan4"}));
  EXPECT_NEAR(row.high_freq_rate, 0.8611, 1e-4);
  EXPECT_EQ(row.correct, 31);
  int total = 0;
  for (const auto &x : r.rows) total += x.count;
  EXPECT_EQ(total, r.total);
  EXPECT_EQ(r.correct, 31);
}

TEST(EvalReportTest, ReferenceSetsTheMajority) {
  const std::vector<EncodedSample> samples{E(U'背', 0), E(U'背', 0), E(U'背', 1)};
  const std::vector<EncodedSample> reference{E(U'背', 1)};
  const std::vector<int> preds{0, 0, 0};
  const std::vector<std::string> pinyins{"bei1", "bei4"};
  const EvalReport r = BuildEvalReport(samples, preds, pinyins, reference);
  EXPECT_EQ(r.rows[0].high_freq_pinyin, "bei4");
  EXPECT_NEAR(r.rows[0].high_freq_rate, 1.0 / 3, 1e-15);
}

TEST(EvalReportTest, TableAndJson) {
  const std::vector<EncodedSample> samples{E(U'背', 0), E(U'背', 1)};
  const std::vector<int> preds{0, 0};
  const std::vector<std::string> pinyins{"bei1", "bei4"};
  const EvalReport r = BuildEvalReport(samples, preds, pinyins);
  const std::string table = ReportToTable(r);
  EXPECT_NE(table.find("背"), std::string::npos);
  EXPECT_NE(table.find("overall"), std::string::npos);
  EXPECT_NE(table.find("50.00%"), std::string::npos);
  const auto j = nlohmann::json::parse(ReportToJson(r));
  EXPECT_EQ(j["overall"], 0.5);
  EXPECT_EQ(j["rows"][0]["char"], "背");
  EXPECT_EQ(j["rows"][0]["count"], 2);
}

TEST(BaselineTest, MajorityOfTraining) {
  const Lexicon lex = TestLexicon();
  std::vector<Sample> train, eval;
  for (int i = 0; i < 3; ++i) train.push_back(S(lex, "传", 0, "zhuan4"));
  train.push_back(S(lex, "传", 0, "chuan2"));
  for (int i = 0; i < 31; ++i) eval.push_back(S(lex, "传", 0, "zhuan4"));
  for (int i = 0; i < 5; ++i) eval.push_back(S(lex, "传", 0, "chuan2"));
  const auto r = MajorityBaseline(train, eval, lex);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].pinyin, "zhuan4");
  EXPECT_NEAR(r.rows[0].rate, 0.8611, 1e-4);
  EXPECT_EQ(r.correct, 31);
}

TEST(BaselineTest, SinglePinyinAndUnseenCharacter) {
  const Lexicon lex = TestLexicon();
  const std::vector<Sample> train{S(lex, "背", 0, "bei4")};
  const std::vector<Sample> eval{S(lex, "背", 0, "bei4"), S(lex, "背", 0, "bei4"),
                                 S(lex, "得", 0, "de2")};
  const auto r = MajorityBaseline(train, eval, lex);
  ASSERT_EQ(r.rows.size(), 2u);
  const auto &bei = r.rows[1];
  EXPECT_EQ(bei.rate, 1.0);
  const auto &de = r.rows[0];
  EXPECT_TRUE(de.from_lexicon);
  EXPECT_EQ(de.pinyin, "de2");
  EXPECT_NE(BaselineToTable(r).find('*'), std::string::npos);
  EXPECT_THROW(MajorityBaseline({}, eval, lex), ConfigError);
}

Model UniformModel(const Lexicon &lex, Variant v) {
  ModelDims d;
  d.char_dim = 3;
  d.word_dim = 4;
  d.hidden = 2;
  d.fc1 = 3;
  d.fc2 = 3;
  d.num_classes = lex.num_classes();
  Rng rng(1);
  Model m;
  m.vocab = CharVocab({U'背', U'得'});
  m.pinyins = lex.inventory();
  m.params = InitModelParams(v, m.vocab.size(), d, rng);
  m.params.predictor.fc3.w.Fill(0.0);
  m.params.predictor.fc3.b.Fill(0.0);
  return m;
}

TEST(DisambiguatorTest, UniformModelTieBreak) {
  const Lexicon lex = TestLexicon();
  const Disambiguator d(UniformModel(lex, Variant::kCC), lex);
  const auto r = d.Predict(U"我背书", 1, false);
  EXPECT_EQ(r.chosen_class, 0);
  EXPECT_EQ(r.chosen, lex.Pinyin(0));
  double sum = 0;
  for (double p : r.probabilities) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_FALSE(r.restricted);
}

TEST(DisambiguatorTest, RestrictChoosesACandidate) {
  const Lexicon lex = TestLexicon();
  Model m = UniformModel(lex, Variant::kCC);
  // Push all mass onto a class that is not a candidate of 背.
  m.params.predictor.fc3.b[*lex.ClassOf("de2")] = 5.0;
  m.params.predictor.fc3.b[*lex.ClassOf("bei4")] = 1.0;
  const Disambiguator d(std::move(m), lex);
  EXPECT_EQ(d.Predict(U"背", 0, false).chosen, "de2");
  const auto r = d.Predict(U"背", 0, true);
  EXPECT_EQ(r.chosen, "bei4");
  EXPECT_TRUE(r.restricted);
  ASSERT_EQ(r.candidates.size(), 2u);
  EXPECT_EQ(r.candidates[0].pinyin, "bei4");
  EXPECT_GE(r.candidates[0].probability, r.candidates[1].probability);
}

TEST(DisambiguatorTest, Errors) {
  const Lexicon lex = TestLexicon();
  const Disambiguator d(UniformModel(lex, Variant::kCC), lex);
  EXPECT_THROW(d.Predict(U"我背书", 0, false), DomainError);
  EXPECT_THROW(d.Predict(U"我背书", 3, false), IndexError);
  EXPECT_THROW(Disambiguator(UniformModel(lex, Variant::kCW), lex), ConfigError);
  std::istringstream other("背\tbei1,bei4\n");
  EXPECT_THROW(Disambiguator(UniformModel(lex, Variant::kCC), ParseLexicon(other)), ConfigError);
}

}  // namespace
}  // namespace polyphone
