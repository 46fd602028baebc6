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

#ifndef POLYPHONE_EVAL_H_
#define POLYPHONE_EVAL_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polyphone/corpus.h"
#include "polyphone/features.h"
#include "polyphone/model.h"

namespace polyphone {

// Inference-mode logits [N x K] for encoded samples, in input order.
Tensor InferLogits(const Model &model, const WordVecStore *words,
                   std::span<const EncodedSample> samples, int batch_size = 64);

// Unrestricted argmax over all classes, ties to the lowest index.
std::vector<int> PredictClasses(const Model &model, const WordVecStore *words,
                                std::span<const EncodedSample> samples, int batch_size = 64);

struct CharReportRow {
  char32_t character = 0;
  std::string high_freq_pinyin;
  std::vector<std::string> low_freq_pinyins;
  double high_freq_rate = 0.0;
  double accuracy = 0.0;
  int correct = 0;
  int count = 0;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  double overall_high_freq_rate = 0.0;
  int correct = 0;
  int total = 0;
  std::vector<CharReportRow> rows;  // codepoint order
};

// Per-character breakdown. The high-frequency pinyin of a character is its
// most frequent gold class in `reference` when given (normally the training
// set), otherwise in `samples`; high_freq_rate is the share of `samples`
// carrying it. Ties go to the lowest class index.
EvalReport BuildEvalReport(std::span<const EncodedSample> samples,
                           std::span<const int> predictions,
                           const std::vector<std::string> &pinyins,
                           std::span<const EncodedSample> reference = {});

EvalReport EvaluateAccuracy(const Model &model, const WordVecStore *words,
                            std::span<const EncodedSample> samples,
                            std::span<const EncodedSample> reference = {});

// {"overall": f, "high_freq_rate": f, "correct": n, "total": n,
//  "rows": [{"char", "high_freq_pinyin", "low_freq_pinyins", "rate",
//            "accuracy", "correct", "count"}]}
std::string ReportToJson(const EvalReport &report);
// Aligned text table, percentages with two decimals, closing "overall" row.
std::string ReportToTable(const EvalReport &report);

struct BaselineRow {
  char32_t character = 0;
  std::string pinyin;  // the predicted (training-majority) pinyin
  int correct = 0;
  int count = 0;
  double rate = 0.0;
  bool from_lexicon = false;  // character unseen in training
};

struct BaselineReport {
  double overall = 0.0;
  int correct = 0;
  int total = 0;
  std::vector<BaselineRow> rows;
};

// Predicts each character's most frequent training pinyin for all of its
// eval samples. Characters absent from training fall back to their first
// lexicon candidate and are flagged.
BaselineReport MajorityBaseline(std::span<const Sample> train, std::span<const Sample> eval,
                                const Lexicon &lexicon);

std::string BaselineToTable(const BaselineReport &report);

struct PinyinProbability {
  std::string pinyin;
  int class_index = 0;
  double probability = 0.0;
};

struct PredictionResult {
  char32_t character = 0;
  // The character's lexicon candidates, most probable first.
  std::vector<PinyinProbability> candidates;
  // Softmax over the whole inventory, by class index.
  std::vector<double> probabilities;
  std::string chosen;
  int chosen_class = 0;
  bool restricted = false;
};

// Single-sentence prediction around a trained model.
class Disambiguator {
 public:
  // `words` is required for CW and CWC. Without `segmenter`, words are found
  // by longest match over the word-vector vocabulary.
  Disambiguator(Model model, Lexicon lexicon, std::optional<WordVecStore> words = std::nullopt,
                std::unique_ptr<Segmenter> segmenter = nullptr);

  // Throws IndexError for a bad index and DomainError for a character the
  // lexicon does not know. With `restrict`, the argmax only ranges over the
  // character's candidates; probabilities are always unrestricted.
  PredictionResult Predict(std::u32string_view sentence, int index, bool restrict) const;

  const Model &model() const { return model_; }
  const Lexicon &lexicon() const { return lexicon_; }

 private:
  Model model_;
  Lexicon lexicon_;
  std::optional<WordVecStore> words_;
  std::unique_ptr<Segmenter> segmenter_;
};

}  // namespace polyphone

#endif  // POLYPHONE_EVAL_H_
