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

// Acceptance suite. One test per criterion; the listener below prints a
// single PASS/FAIL line for each, e.g.
//   PASS criterion 3: selection oracle (0.0s)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "polyphone/checkpoint.h"
#include "polyphone/corpus.h"
#include "polyphone/eval.h"
#include "polyphone/features.h"
#include "polyphone/model.h"
#include "polyphone/model_check.h"
#include "polyphone/rng.h"
#include "polyphone/train.h"
#include "support/synthetic.h"

namespace polyphone {
namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr Variant kAllVariants[] = {Variant::kCW, Variant::kCC, Variant::kCWC};

// Layer sizes for the training criteria. Everything but the LSTM width is
// the default configuration; 64 units per direction keep the three
// synthetic runs inside the time budget on one core.
TrainConfig SyntheticTrainConfig(Variant v) {
  TrainConfig cfg;
  cfg.variant = v;
  cfg.batch_size = 8;
  cfg.dims.hidden = 64;
  return cfg;
}

bool IsCueFamily(const testing::SyntheticCorpus &corpus, const Sample &s) {
  for (size_t i = 0; i < corpus.samples.size(); ++i) {
    if (corpus.samples[i].target_char() == s.target_char()) {
      return corpus.families[i] == testing::Family::kCue;
    }
  }
  return false;
}

double Accuracy(const std::vector<int> &predicted, std::span<const Sample> samples) {
  int correct = 0;
  for (size_t i = 0; i < samples.size(); ++i) correct += predicted[i] == samples[i].gold;
  return samples.empty() ? 0.0 : static_cast<double>(correct) / samples.size();
}

// ---------------------------------------------------------------------------

TEST(Acceptance, Criterion01_GradOracle) {
  const auto t0 = Clock::now();
  for (Variant v : kAllVariants) {
    const auto report = CheckModelGradients(v, GradCheckDims(), /*seed=*/11);
    ASSERT_FALSE(report.tensors.empty());
    for (const auto &t : report.tensors) {
      EXPECT_LT(t.max_rel_error, 1e-4) << VariantName(v) << " " << t.name;
      EXPECT_GT(t.checked, 0) << VariantName(v) << " " << t.name;
    }
    std::printf("  %s max rel. error %.3e over %zu tensors\n",
                std::string(VariantName(v)).c_str(), report.max_rel_error,
                report.tensors.size());
  }
  EXPECT_LT(SecondsSince(t0), 5 * 60.0);
}

TEST(Acceptance, Criterion02_PaddingInvariance) {
  Rng rng(21);
  ModelDims dims;
  dims.num_classes = 20;
  constexpr int kChars = 60;
  WordVecStore words(dims.word_dim);
  std::vector<double> vec(dims.word_dim);
  for (int w = 0; w < 5; ++w) {
    for (double &x : vec) x = rng.Uniform(-1.0, 1.0);
    words.Set("w" + std::to_string(w), vec);
  }
  double worst = 0.0;
  for (Variant v : kAllVariants) {
    const ModelParams params = InitModelParams(v, kChars, dims, rng);
    for (int pair = 0; pair < 50; ++pair) {
      std::vector<EncodedSample> two(2);
      const int len0 = 2 + static_cast<int>(rng.UniformInt(20));
      int len1 = len0;
      while (len1 == len0) len1 = 2 + static_cast<int>(rng.UniformInt(20));
      const int lens[2] = {len0, len1};
      for (int k = 0; k < 2; ++k) {
        for (int t = 0; t < lens[k]; ++t) {
          two[k].char_ids.push_back(2 + static_cast<int32_t>(rng.UniformInt(kChars - 2)));
        }
        two[k].target_index = static_cast<int>(rng.UniformInt(lens[k]));
        two[k].word_id = static_cast<int>(rng.UniformInt(6)) - 1;
        two[k].gold = static_cast<int>(rng.UniformInt(dims.num_classes));
      }
      Rng unused(0);
      const auto together = MakeBatches(two, 2, kPadId, 0, false);
      ASSERT_EQ(together.size(), 1u);
      const Tensor both = Forward(together[0], params, &words, false, unused).logits;
      for (int k = 0; k < 2; ++k) {
        const auto alone = MakeBatches(std::span(two).subspan(k, 1), 1, kPadId, 0, false);
        const Tensor one = Forward(alone[0], params, &words, false, unused).logits;
        for (int64_t c = 0; c < dims.num_classes; ++c) {
          worst = std::max(worst, std::abs(one.at(0, c) - both.at(k, c)));
        }
      }
    }
  }
  std::printf("  max |batched - alone| = %.3e\n", worst);
  EXPECT_LE(worst, 1e-9);
}

TEST(Acceptance, Criterion03_SelectionOracle) {
  Rng rng(31);
  for (int c = 0; c < 100; ++c) {
    const int64_t b = 1 + static_cast<int64_t>(rng.UniformInt(6));
    const int64_t l = 1 + static_cast<int64_t>(rng.UniformInt(12));
    const int64_t h = 1 + static_cast<int64_t>(rng.UniformInt(9));
    Tensor enc({b, l, h});
    for (double &x : enc.values()) x = rng.Normal();
    std::vector<int> lengths(b), targets(b);
    for (int64_t i = 0; i < b; ++i) {
      lengths[i] = i == 0 ? static_cast<int>(l) : 1 + static_cast<int>(rng.UniformInt(l));
      targets[i] = static_cast<int>(rng.UniformInt(lengths[i]));
    }
    const Tensor got = SelectPosition(enc, targets, lengths);
    ASSERT_EQ(got.shape(), (Shape{b, h}));
    for (int64_t i = 0; i < b; ++i) {
      for (int64_t k = 0; k < h; ++k) {
        double product = 0.0;  // z^T enc[i] with z one-hot at the target
        for (int64_t t = 0; t < l; ++t) {
          product += (t == targets[i] ? 1.0 : 0.0) * enc.at(i, t, k);
        }
        ASSERT_EQ(got.at(i, k), product) << "case " << c;
      }
    }
  }
}

TEST(Acceptance, Criterion04_Overfit) {
  const auto t0 = Clock::now();
  testing::SyntheticOptions o;
  o.num_sentences = 200;
  o.cue_fraction = 0.0;  // word-determined only; see README
  o.seed = 41;
  const auto corpus = testing::MakeSyntheticCorpus(o);
  for (Variant v : kAllVariants) {
    const TrainConfig cfg = SyntheticTrainConfig(v);
    TrainState state;
    state.model = InitModel(corpus.samples, corpus.lexicon, cfg);
    const auto enc = EncodeSamples(corpus.samples, state.model.vocab, &corpus.words);
    double acc = 0.0;
    while (state.step < 2000) {
      TrainEpoch(state, enc, &corpus.words, cfg);
      acc = Accuracy(PredictClasses(state.model, &corpus.words, enc), corpus.samples);
      if (acc >= 0.99) break;
    }
    std::printf("  %s train accuracy %.4f after %lld steps\n",
                std::string(VariantName(v)).c_str(), acc, static_cast<long long>(state.step));
    EXPECT_GE(acc, 0.99) << VariantName(v);
    EXPECT_LE(state.step, 2000) << VariantName(v);
  }
  EXPECT_LT(SecondsSince(t0), 10 * 60.0);
}

TEST(Acceptance, Criterion05_SyntheticAblation) {
  const auto t0 = Clock::now();
  const auto corpus = testing::MakeSyntheticCorpus({});
  const Split split = SplitDataset(corpus.samples, SplitRule{}, 1);

  std::vector<Sample> cue_eval;
  for (const auto &s : split.eval) {
    if (IsCueFamily(corpus, s)) cue_eval.push_back(s);
  }
  ASSERT_FALSE(cue_eval.empty());
  const double baseline = MajorityBaseline(split.train, split.eval, corpus.lexicon).overall;
  const double cue_baseline = MajorityBaseline(split.train, cue_eval, corpus.lexicon).overall;
  std::printf("  eval %zu samples (%zu cue family); baseline %.4f, cue-family baseline %.4f\n",
              split.eval.size(), cue_eval.size(), baseline, cue_baseline);

  std::map<Variant, double> overall, cue;
  for (Variant v : kAllVariants) {
    TrainConfig cfg = SyntheticTrainConfig(v);
    cfg.max_epochs = 25;
    const FitResult fit = Fit(split.train, split.eval, corpus.lexicon, &corpus.words, nullptr, cfg);
    const auto enc = EncodeSamples(cue_eval, fit.best.vocab, &corpus.words);
    overall[v] = fit.best_eval_accuracy;
    cue[v] = Accuracy(PredictClasses(fit.best, &corpus.words, enc), cue_eval);
    std::printf("  %s best epoch %lld: eval %.4f, cue family %.4f\n",
                std::string(VariantName(v)).c_str(), static_cast<long long>(fit.best_epoch),
                overall[v], cue[v]);
  }
  EXPECT_GE(overall[Variant::kCWC], overall[Variant::kCC]);
  EXPECT_GE(overall[Variant::kCC], baseline);
  EXPECT_LE(std::abs(cue[Variant::kCW] - cue_baseline), 0.05);
  EXPECT_GE(cue[Variant::kCC] - cue_baseline, 0.20);
  EXPECT_GE(cue[Variant::kCWC] - cue_baseline, 0.20);
  EXPECT_GE(overall[Variant::kCWC], 0.95);
  EXPECT_LT(SecondsSince(t0), 30 * 60.0);
}

TEST(Acceptance, Criterion06_Shapes) {
  Rng rng(61);
  const ModelDims dims;  // default sizes, K = 285
  constexpr int kChars = 40;
  WordVecStore words(dims.word_dim);
  words.Set("w", std::vector<double>(dims.word_dim, 0.5));
  const int64_t width[] = {300, 612, 812};
  for (int64_t b : {1, 7}) {
    std::vector<EncodedSample> samples(b);
    for (auto &s : samples) {
      const int len = 3 + static_cast<int>(rng.UniformInt(10));
      for (int t = 0; t < len; ++t) s.char_ids.push_back(2 + static_cast<int32_t>(rng.UniformInt(kChars - 2)));
      s.target_index = static_cast<int>(rng.UniformInt(len));
      s.word_id = 0;
    }
    const Batch batch = MakeBatches(samples, static_cast<int>(b), kPadId, 0, false).at(0);
    const int64_t l = batch.max_len();
    for (int vi = 0; vi < 3; ++vi) {
      const Variant v = kAllVariants[vi];
      const ModelParams params = InitModelParams(v, kChars, dims, rng);
      const auto r = Forward(batch, params, &words, false, rng);
      const auto &c = r.cache;
      const std::string tag = std::string(VariantName(v)) + " B=" + std::to_string(b);
      EXPECT_EQ(c.char_vec.shape(), (Shape{b, 100})) << tag;
      if (UsesWordCondition(v)) EXPECT_EQ(c.word_vec.shape(), (Shape{b, 200})) << tag;
      if (UsesSentenceCondition(v)) {
        EXPECT_EQ(c.embedded.shape(), (Shape{b, l, 100})) << tag;
        EXPECT_EQ(c.encoded.shape(), (Shape{b, l, 512})) << tag;
      }
      EXPECT_EQ(c.condition.shape(), (Shape{b, width[vi]})) << tag;
      EXPECT_EQ(c.predictor.h1.shape(), (Shape{b, 512})) << tag;
      EXPECT_EQ(c.predictor.h2.shape(), (Shape{b, 1024})) << tag;
      EXPECT_EQ(r.logits.shape(), (Shape{b, 285})) << tag;
    }
  }
}

TEST(Acceptance, Criterion07_Determinism) {
  testing::SyntheticOptions o;
  o.num_sentences = 300;
  o.seed = 71;
  const auto corpus = testing::MakeSyntheticCorpus(o);
  const Split split = SplitDataset(corpus.samples, SplitRule{}, 2);
  for (Variant v : kAllVariants) {
    TrainConfig cfg = SyntheticTrainConfig(v);
    cfg.dims.hidden = 32;
    cfg.max_epochs = 3;  // dropout stays on, so the dropout streams are covered
    auto run = [&] {
      return Fit(split.train, split.eval, corpus.lexicon, &corpus.words, nullptr, cfg);
    };
    const FitResult a = run(), b = run();
    EXPECT_TRUE(SerializeCheckpoint(a.best) == SerializeCheckpoint(b.best)) << VariantName(v);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (size_t i = 0; i < a.history.size(); ++i) {
      EXPECT_EQ(a.history[i].loss, b.history[i].loss) << VariantName(v) << " epoch " << i;
    }
  }
}

TEST(Acceptance, Criterion08_BaselineOracle) {
  Rng rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    testing::SyntheticOptions o;
    o.num_sentences = 50 + static_cast<int>(rng.UniformInt(300));
    o.word_dim = 4;
    o.seed = 800 + trial;
    const auto corpus = testing::MakeSyntheticCorpus(o);
    std::vector<Sample> train, eval;
    const double p_eval = rng.Uniform(0.1, 0.6);
    for (const auto &s : corpus.samples) (rng.Uniform(0.0, 1.0) < p_eval ? eval : train).push_back(s);
    if (train.empty() || eval.empty()) continue;
    const auto report = MajorityBaseline(train, eval, corpus.lexicon);

    // Brute force: recount the training set for every eval sample.
    int correct = 0;
    for (const auto &e : eval) {
      int best = -1, best_count = 0;
      for (int k = 0; k < corpus.lexicon.num_classes(); ++k) {
        int n = 0;
        for (const auto &t : train) n += t.target_char() == e.target_char() && t.gold == k;
        if (n > best_count) best = k, best_count = n;
      }
      if (best < 0) best = corpus.lexicon.Candidates(e.target_char()).front();
      correct += best == e.gold;
    }
    EXPECT_EQ(report.correct, correct) << "trial " << trial;
    EXPECT_EQ(report.total, static_cast<int>(eval.size())) << "trial " << trial;
    EXPECT_EQ(report.overall, static_cast<double>(correct) / eval.size()) << "trial " << trial;
  }
}

TEST(Acceptance, Criterion09_SplitRule) {
  const SplitRule rule;
  const int counts[] = {100, 15, 14, 1};
  const int expected[] = {7, 1, 3, 0};
  for (int i = 0; i < 4; ++i) EXPECT_EQ(EvalCountForPair(counts[i], rule), expected[i]);

  // The same counts through the full split, one pair per count.
  const Lexicon lexicon({{U'a', {"a1", "a2"}}, {U'b', {"b1", "b2"}}});
  std::vector<Sample> samples;
  const std::pair<char32_t, std::string> pairs[] = {
      {U'a', "a1"}, {U'a', "a2"}, {U'b', "b1"}, {U'b', "b2"}};
  for (int i = 0; i < 4; ++i) {
    for (int n = 0; n < counts[i]; ++n) {
      Sample s;
      s.chars = std::u32string(1, pairs[i].first) + U"xyz";
      s.gold = *lexicon.ClassOf(pairs[i].second);
      samples.push_back(s);
    }
  }
  const Split split = SplitDataset(samples, rule, 9);
  for (int i = 0; i < 4; ++i) {
    const char32_t c = pairs[i].first;
    const int gold = *lexicon.ClassOf(pairs[i].second);
    const auto in_eval = std::count_if(split.eval.begin(), split.eval.end(), [&](const Sample &s) {
      return s.target_char() == c && s.gold == gold;
    });
    EXPECT_EQ(in_eval, expected[i]) << "pair of " << counts[i];
  }
  EXPECT_EQ(split.train.size() + split.eval.size(), samples.size());
}

TEST(Acceptance, Criterion10_CheckpointRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "polyphone_acceptance_ckpt";
  std::filesystem::create_directories(dir);
  const auto corpus = testing::MakeSyntheticCorpus({.num_sentences = 100});
  auto read = [](const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  for (Variant v : kAllVariants) {
    TrainConfig cfg;
    cfg.variant = v;
    const Model model = InitModel(corpus.samples, corpus.lexicon, cfg);
    const auto first = dir / (std::string(VariantName(v)) + "_1.ckpt");
    const auto second = dir / (std::string(VariantName(v)) + "_2.ckpt");
    SaveCheckpoint(model, first);
    SaveCheckpoint(LoadCheckpoint(first), second);
    const std::string a = read(first), b = read(second);
    EXPECT_FALSE(a.empty());
    EXPECT_TRUE(a == b) << VariantName(v) << ": files differ";
  }
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------

class CriterionPrinter : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo &info) override {
    static const char *const kNames[] = {
        "", "grad oracle", "padding invariance", "selection oracle", "overfit",
        "synthetic ablation", "shapes", "determinism", "baseline oracle", "split rule",
        "checkpoint round-trip"};
    const std::string name = info.name();  // CriterionNN_...
    const int n = std::stoi(name.substr(9, 2));
    const auto *r = info.result();
    std::printf("%s criterion %d: %s (%.1fs)\n", r->Passed() ? "PASS" : "FAIL", n, kNames[n],
                r->elapsed_time() / 1000.0);
    std::fflush(stdout);
  }
};

}  // namespace
}  // namespace polyphone

int main(int argc, char **argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::UnitTest::GetInstance()->listeners().Append(new polyphone::CriterionPrinter);
  return RUN_ALL_TESTS();
}
