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

#ifndef POLYPHONE_CORPUS_H_
#define POLYPHONE_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace polyphone {

// Character -> ordered candidate pinyins, plus the global pinyin inventory.
// Class indices follow the inventory, which is sorted lexicographically so
// that the same lexicon always yields the same classes.
class Lexicon {
 public:
  Lexicon() = default;
  // Validates every pinyin and builds the inventory.
  explicit Lexicon(std::map<char32_t, std::vector<std::string>> entries);

  bool Contains(char32_t c) const { return candidates_.count(c) > 0; }
  bool IsPolyphonic(char32_t c) const;
  // Class indices of the candidates, in file order. Throws DomainError for
  // characters outside the lexicon.
  const std::vector<int> &Candidates(char32_t c) const;
  std::vector<std::string> CandidatePinyins(char32_t c) const;

  std::optional<int> ClassOf(const std::string &pinyin) const;
  const std::string &Pinyin(int class_index) const { return inventory_.at(class_index); }
  const std::vector<std::string> &inventory() const { return inventory_; }
  int num_classes() const { return static_cast<int>(inventory_.size()); }
  size_t size() const { return candidates_.size(); }
  std::vector<char32_t> Characters() const;

 private:
  std::map<char32_t, std::vector<int>> candidates_;
  std::vector<std::string> inventory_;
  std::unordered_map<std::string, int> class_of_;
};

// Lowercase latin syllable (ü and v allowed) followed by a tone digit 1-5.
bool IsValidPinyin(const std::string &pinyin);

// TSV lines of the form `<char>\t<pinyin>[,<pinyin>...]`.
Lexicon ParseLexicon(std::istream &in);
Lexicon LoadLexicon(const std::filesystem::path &path);

// Half-open character span [start, end).
struct Span {
  int start = 0;
  int end = 0;

  int size() const { return end - start; }
  bool Contains(int i) const { return start <= i && i < end; }
  bool operator==(const Span &) const = default;
};

struct Sample {
  std::u32string chars;
  int target_index = 0;
  // Containing word as segmented upstream; nullopt asks the segmenter.
  std::optional<Span> word_span;
  int gold = 0;  // class index into the lexicon inventory

  char32_t target_char() const { return chars.at(target_index); }
  bool operator==(const Sample &) const = default;
};

// JSON-lines corpus: {"text": str, "index": int, "pinyin": str,
// "word": [start, end]}; "word" optional. Blank lines are skipped. Each
// record is validated against the lexicon; violations raise
// AnnotationError carrying the 1-based line number.
std::vector<Sample> ParseCorpus(std::istream &in, const Lexicon &lexicon);
std::vector<Sample> LoadCorpus(const std::filesystem::path &path, const Lexicon &lexicon);

std::string SampleToJsonLine(const Sample &sample, const Lexicon &lexicon);
void WriteCorpus(std::ostream &out, std::span<const Sample> samples, const Lexicon &lexicon);
void SaveCorpus(const std::filesystem::path &path, std::span<const Sample> samples,
                const Lexicon &lexicon);

struct SplitRule {
  double eval_fraction_major = 0.07;
  double eval_fraction_minor = 0.20;
  // Pairs with fewer samples than this use the minor fraction.
  int minor_threshold = 15;

  void Validate() const;
};

struct Split {
  std::vector<Sample> train;
  std::vector<Sample> eval;
};

// Number of eval samples the rule assigns to a (character, pinyin) pair of
// the given size. Rounds half away from zero.
int EvalCountForPair(int count, const SplitRule &rule);

// Stratified split: every (character, gold) pair contributes
// EvalCountForPair() samples to eval, chosen by a seeded shuffle. Both
// halves keep the input order.
Split SplitDataset(std::span<const Sample> samples, const SplitRule &rule, uint64_t seed);

// A sample after vocabulary and word-vector lookup.
struct EncodedSample {
  std::vector<int32_t> char_ids;
  int target_index = 0;
  int word_id = -1;  // row in the word-vector store, -1 when absent
  int gold = 0;
  char32_t target_char = 0;
};

// Row-major [rows x cols] grid of ids.
struct IdGrid {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int32_t> ids;

  int32_t at(int64_t r, int64_t c) const { return ids[r * cols + c]; }
  int32_t &at(int64_t r, int64_t c) { return ids[r * cols + c]; }
};

struct Batch {
  IdGrid char_ids;  // [B x L_max], padded with the pad id
  std::vector<int> lengths;
  std::vector<int> target_indices;
  std::vector<int> word_ids;
  std::vector<int> gold;
  std::vector<char32_t> target_chars;

  int64_t size() const { return char_ids.rows; }
  int64_t max_len() const { return char_ids.cols; }
};

// Groups samples into batches of at most `batch_size`, each padded to its
// own longest sentence. With `shuffle` the order is a seeded permutation.
std::vector<Batch> MakeBatches(std::span<const EncodedSample> samples, int batch_size,
                               int32_t pad_id, uint64_t seed, bool shuffle);

// Seeded Fisher-Yates permutation of [0, n).
std::vector<size_t> ShuffledIndices(size_t n, uint64_t seed);

}  // namespace polyphone

#endif  // POLYPHONE_CORPUS_H_
