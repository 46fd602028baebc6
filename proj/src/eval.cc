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

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"

#include "polyphone/errors.h"
#include "polyphone/utf8.h"

namespace polyphone {
namespace {

// Most frequent class in `counts`, ties to the lowest index.
int MajorityClass(const std::map<int, int> &counts) {
  int best = -1, best_count = -1;
  for (const auto &[cls, n] : counts) {
    if (n > best_count) {
      best = cls;
      best_count = n;
    }
  }
  return best;
}

std::string Percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

// Left-justifies by codepoint count.
std::string Pad(const std::string &s, size_t width) {
  const size_t n = DecodeUtf8(s).size();
  return n >= width ? s : s + std::string(width - n, ' ');
}

std::string Join(const std::vector<std::string> &parts, const char *sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

Tensor InferLogits(const Model &model, const WordVecStore *words,
                   std::span<const EncodedSample> samples, int batch_size) {
  const int64_t k = model.params.predictor.fc3.out_dim();
  if (samples.empty()) return Tensor();
  Tensor out({static_cast<int64_t>(samples.size()), k});
  Rng unused(0);
  int64_t row = 0;
  for (const auto &batch : MakeBatches(samples, batch_size, kPadId, 0, false)) {
    const auto fwd = Forward(batch, model.params, words, false, unused);
    std::copy(fwd.logits.data(), fwd.logits.data() + fwd.logits.size(), out.row(row));
    row += batch.size();
  }
  return out;
}

std::vector<int> PredictClasses(const Model &model, const WordVecStore *words,
                                std::span<const EncodedSample> samples, int batch_size) {
  std::vector<int> preds;
  if (samples.empty()) return preds;
  const Tensor logits = InferLogits(model, words, samples, batch_size);
  const int64_t k = logits.dim(1);
  for (int64_t r = 0; r < logits.dim(0); ++r) {
    preds.push_back(Argmax({logits.row(r), static_cast<size_t>(k)}));
  }
  return preds;
}

EvalReport BuildEvalReport(std::span<const EncodedSample> samples,
                           std::span<const int> predictions,
                           const std::vector<std::string> &pinyins,
                           std::span<const EncodedSample> reference) {
  if (predictions.size() != samples.size()) {
    throw ShapeError("one prediction per sample required");
  }
  struct Acc {
    std::map<int, int> eval_counts;
    std::map<int, int> ref_counts;
    int correct = 0;
    int count = 0;
  };
  std::map<char32_t, Acc> by_char;
  for (size_t i = 0; i < samples.size(); ++i) {
    auto &a = by_char[samples[i].target_char];
    ++a.eval_counts[samples[i].gold];
    ++a.count;
    if (predictions[i] == samples[i].gold) ++a.correct;
  }
  for (const auto &s : reference) {
    auto it = by_char.find(s.target_char);
    if (it != by_char.end()) ++it->second.ref_counts[s.gold];
  }

  EvalReport report;
  int majority_hits = 0;
  for (const auto &[c, a] : by_char) {
    CharReportRow row;
    row.character = c;
    const int major =
        MajorityClass(a.ref_counts.empty() ? a.eval_counts : a.ref_counts);
    row.high_freq_pinyin = pinyins.at(major);
    for (const auto &[cls, n] : a.eval_counts) {
      if (cls != major) row.low_freq_pinyins.push_back(pinyins.at(cls));
    }
    const auto hit = a.eval_counts.find(major);
    const int hits = hit == a.eval_counts.end() ? 0 : hit->second;
    majority_hits += hits;
    row.high_freq_rate = static_cast<double>(hits) / a.count;
    row.correct = a.correct;
    row.count = a.count;
    row.accuracy = static_cast<double>(a.correct) / a.count;
    report.correct += a.correct;
    report.total += a.count;
    report.rows.push_back(std::move(row));
  }
  if (report.total > 0) {
    report.overall_accuracy = static_cast<double>(report.correct) / report.total;
    report.overall_high_freq_rate = static_cast<double>(majority_hits) / report.total;
  }
  return report;
}

EvalReport EvaluateAccuracy(const Model &model, const WordVecStore *words,
                            std::span<const EncodedSample> samples,
                            std::span<const EncodedSample> reference) {
  const auto preds = PredictClasses(model, words, samples);
  return BuildEvalReport(samples, preds, model.pinyins, reference);
}

std::string ReportToJson(const EvalReport &report) {
  nlohmann::json j;
  j["overall"] = report.overall_accuracy;
  j["high_freq_rate"] = report.overall_high_freq_rate;
  j["correct"] = report.correct;
  j["total"] = report.total;
  j["rows"] = nlohmann::json::array();
  for (const auto &r : report.rows) {
    j["rows"].push_back({{"char", EncodeUtf8(r.character)},
                         {"high_freq_pinyin", r.high_freq_pinyin},
                         {"low_freq_pinyins", r.low_freq_pinyins},
                         {"rate", r.high_freq_rate},
                         {"accuracy", r.accuracy},
                         {"correct", r.correct},
                         {"count", r.count}});
  }
  return j.dump(2);
}

std::string ReportToTable(const EvalReport &report) {
  std::ostringstream os;
  os << Pad("char", 8) << Pad("high-fre", 10) << Pad("low-fre", 18) << Pad("high-fre rate", 15)
     << Pad("accuracy", 10) << "count\n";
  for (const auto &r : report.rows) {
    os << Pad(EncodeUtf8(r.character), 8) << Pad(r.high_freq_pinyin, 10)
       << Pad(r.low_freq_pinyins.empty() ? "-" : Join(r.low_freq_pinyins, ","), 18)
       << Pad(Percent(r.high_freq_rate), 15) << Pad(Percent(r.accuracy), 10) << r.count
       << '\n';
  }
  os << Pad("overall", 8) << Pad("-", 10) << Pad("-", 18)
     << Pad(Percent(report.overall_high_freq_rate), 15)
     << Pad(Percent(report.overall_accuracy), 10) << report.total << '\n';
  return os.str();
}

BaselineReport MajorityBaseline(std::span<const Sample> train, std::span<const Sample> eval,
                                const Lexicon &lexicon) {
  if (train.empty() || eval.empty()) {
    throw ConfigError("majority baseline needs non-empty train and eval sets");
  }
  std::map<char32_t, std::map<int, int>> train_counts;
  for (const auto &s : train) ++train_counts[s.target_char()][s.gold];

  std::map<char32_t, BaselineRow> rows;
  for (const auto &s : eval) {
    const char32_t c = s.target_char();
    auto [it, inserted] = rows.try_emplace(c);
    BaselineRow &row = it->second;
    if (inserted) {
      row.character = c;
      auto tc = train_counts.find(c);
      int predicted;
      if (tc == train_counts.end()) {
        predicted = lexicon.Candidates(c).front();
        row.from_lexicon = true;
      } else {
        predicted = MajorityClass(tc->second);
      }
      row.pinyin = lexicon.Pinyin(predicted);
    }
    ++row.count;
    if (lexicon.Pinyin(s.gold) == row.pinyin) ++row.correct;
  }

  BaselineReport report;
  for (auto &[c, row] : rows) {
    row.rate = static_cast<double>(row.correct) / row.count;
    report.correct += row.correct;
    report.total += row.count;
    report.rows.push_back(row);
  }
  report.overall = static_cast<double>(report.correct) / report.total;
  return report;
}

std::string BaselineToTable(const BaselineReport &report) {
  std::ostringstream os;
  os << Pad("char", 8) << Pad("high-fre", 10) << Pad("high-fre rate", 15) << "count\n";
  for (const auto &r : report.rows) {
    os << Pad(EncodeUtf8(r.character), 8) << Pad(r.pinyin + (r.from_lexicon ? "*" : ""), 10)
       << Pad(Percent(r.rate), 15) << r.count << '\n';
  }
  os << Pad("overall", 8) << Pad("-", 10) << Pad(Percent(report.overall), 15) << report.total
     << '\n';
  if (std::any_of(report.rows.begin(), report.rows.end(),
                  [](const BaselineRow &r) { return r.from_lexicon; })) {
    os << "* character unseen in training; first lexicon candidate used\n";
  }
  return os.str();
}

// --- Disambiguator ---------------------------------------------------------

Disambiguator::Disambiguator(Model model, Lexicon lexicon, std::optional<WordVecStore> words,
                             std::unique_ptr<Segmenter> segmenter)
    : model_(std::move(model)),
      lexicon_(std::move(lexicon)),
      words_(std::move(words)),
      segmenter_(std::move(segmenter)) {
  if (lexicon_.inventory() != model_.pinyins) {
    throw ConfigError("lexicon pinyin inventory differs from the model's");
  }
  if (UsesWordCondition(model_.variant()) && !words_) {
    throw ConfigError("variant " + std::string(VariantName(model_.variant())) +
                      " needs word vectors");
  }
  if (words_ && !segmenter_) {
    segmenter_ = std::make_unique<LongestMatchSegmenter>(LongestMatchSegmenter::FromStore(*words_));
  }
}

PredictionResult Disambiguator::Predict(std::u32string_view sentence, int index,
                                        bool restrict) const {
  if (index < 0 || index >= static_cast<int>(sentence.size())) {
    throw IndexError("index " + std::to_string(index) + " outside sentence of length " +
                     std::to_string(sentence.size()));
  }
  const char32_t c = sentence[index];
  const auto &cands = lexicon_.Candidates(c);

  Sample s;
  s.chars = std::u32string(sentence);
  s.target_index = index;
  const WordVecStore *words = words_ ? &*words_ : nullptr;
  const auto encoded = EncodeSamples(std::span<const Sample>(&s, 1), model_.vocab, words,
                                     segmenter_.get());
  const Tensor logits = InferLogits(model_, words, encoded, 1);
  const Tensor probs = Softmax(logits);

  PredictionResult r;
  r.character = c;
  r.restricted = restrict;
  r.probabilities.assign(probs.data(), probs.data() + probs.size());
  for (int cls : cands) r.candidates.push_back({lexicon_.Pinyin(cls), cls, r.probabilities[cls]});
  std::stable_sort(r.candidates.begin(), r.candidates.end(),
                   [](const PinyinProbability &a, const PinyinProbability &b) {
                     return a.probability > b.probability;
                   });
  if (restrict) {
    int best = cands.front();
    for (int cls : cands) {
      if (logits[cls] > logits[best] || (logits[cls] == logits[best] && cls < best)) best = cls;
    }
    r.chosen_class = best;
  } else {
    r.chosen_class = Argmax(logits.values());
  }
  r.chosen = model_.pinyins.at(r.chosen_class);
  return r;
}

}  // namespace polyphone
