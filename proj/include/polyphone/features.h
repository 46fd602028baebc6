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

#ifndef POLYPHONE_FEATURES_H_
#define POLYPHONE_FEATURES_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "polyphone/corpus.h"
#include "polyphone/rng.h"
#include "polyphone/tensor.h"

namespace polyphone {

inline constexpr char32_t kPadChar = U'|';
inline constexpr int32_t kPadId = 0;
inline constexpr int32_t kUnkId = 1;
inline constexpr const char *kUnkToken = "<unk>";
inline constexpr int64_t kCharEmbeddingDim = 100;
inline constexpr int64_t kWordVectorDim = 200;

// Character vocabulary. Id 0 is the pad symbol, id 1 the unknown
// character; the rest follow codepoint order.
class CharVocab {
 public:
  CharVocab();
  // `chars` lists ids 2.. in order; must be unique and exclude the pad char.
  explicit CharVocab(std::vector<char32_t> chars);

  int32_t Id(char32_t c) const;
  // Codepoint for ids >= 2. Pad and unknown have no codepoint.
  char32_t Char(int32_t id) const { return chars_.at(id - 2); }
  int64_t size() const { return static_cast<int64_t>(chars_.size()) + 2; }
  const std::vector<char32_t> &chars() const { return chars_; }

  std::vector<int32_t> Encode(std::u32string_view text) const;

  // Tokens in id order, as written to checkpoints: "|", "<unk>", chars...
  std::vector<std::string> Tokens() const;
  static CharVocab FromTokens(std::span<const std::string> tokens);

  bool operator==(const CharVocab &other) const { return chars_ == other.chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int32_t> ids_;
};

CharVocab BuildCharVocab(std::span<const Sample> train_samples);

// [N_c x D_c] lookup table; row kPadId stays zero.
struct CharEmbedding {
  Tensor table;
  bool trainable = true;

  int64_t num_chars() const { return table.dim(0); }
  int64_t dim() const { return table.dim(1); }
};

CharEmbedding MakeCharEmbedding(int64_t num_chars, int64_t dim, Rng &rng);

// Row gather: [B x L] ids -> [B x L x D].
Tensor EmbedChars(const IdGrid &ids, const CharEmbedding &emb);

// Pre-trained word vectors, frozen. Misses are reported as nullopt.
class WordVecStore {
 public:
  explicit WordVecStore(int64_t dim = kWordVectorDim) : dim_(dim) {}

  // Inserts or overwrites; returns true when the word was already present.
  bool Set(const std::string &word, std::span<const double> vec);
  std::optional<int> Find(const std::string &word) const;
  bool Contains(const std::string &word) const { return Find(word).has_value(); }

  std::span<const double> Vector(int id) const;
  int64_t dim() const { return dim_; }
  int64_t size() const { return static_cast<int64_t>(words_.size()); }
  const std::vector<std::string> &words() const { return words_; }

 private:
  int64_t dim_;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, int> index_;
};

// word2vec text layout: "<count> <dim>" header, then "<token> <f1> ... <fdim>".
// The dimension must be kWordVectorDim. Duplicate tokens keep the last
// vector; one warning per duplicate is appended to `warnings` (or written
// to stderr when null).
WordVecStore ParseWordVectors(std::istream &in, std::vector<std::string> *warnings = nullptr);
WordVecStore LoadWordVectors(const std::filesystem::path &path,
                             std::vector<std::string> *warnings = nullptr);

// Tiles a sentence into word spans.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<Span> Segment(std::u32string_view sentence) const = 0;
};

// Greedy forward longest match. Characters that start no dictionary word
// become single-character spans.
class LongestMatchSegmenter : public Segmenter {
 public:
  LongestMatchSegmenter() = default;
  explicit LongestMatchSegmenter(std::span<const std::u32string> words);
  static LongestMatchSegmenter FromStore(const WordVecStore &store);

  void Add(std::u32string word);
  std::vector<Span> Segment(std::u32string_view sentence) const override;
  size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::u32string> words_;
  size_t max_len_ = 0;
};

// One word per line, UTF-8.
LongestMatchSegmenter LoadSegmenterDictionary(const std::filesystem::path &path);

std::vector<Span> Segment(std::u32string_view sentence,
                          std::span<const std::u32string> dictionary);

// The span that contains `index`; spans must tile the sentence.
Span ContainingSpan(std::span<const Span> spans, int index);

// The containing word of the sample: its annotated span if present, else
// the segmenter's span around the target.
Span WordSpanFor(const Sample &sample, const Segmenter &segmenter);

// Store row for the word containing the target, or nullopt on a miss.
std::optional<int> WordIdFor(const Sample &sample, std::span<const Span> spans,
                             const WordVecStore &store);

// Store vector of the word containing the target; the zero vector on a miss.
Tensor WordCondition(const Sample &sample, std::span<const Span> spans,
                     const WordVecStore &store);

// Maps samples to ids. With a null store every word id is -1. Spans come
// from the sample annotation when present, otherwise from `segmenter`
// (defaulting to longest match over the store's words).
std::vector<EncodedSample> EncodeSamples(std::span<const Sample> samples,
                                         const CharVocab &vocab,
                                         const WordVecStore *store,
                                         const Segmenter *segmenter = nullptr);

}  // namespace polyphone

#endif  // POLYPHONE_FEATURES_H_
