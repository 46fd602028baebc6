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

#include "polyphone/features.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "polyphone/errors.h"
#include "polyphone/numcore.h"
#include "polyphone/utf8.h"

namespace polyphone {

// --- Vocabulary ------------------------------------------------------------

CharVocab::CharVocab() = default;

CharVocab::CharVocab(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  for (size_t i = 0; i < chars_.size(); ++i) {
    if (chars_[i] == kPadChar) throw ConfigError("pad character cannot be a vocabulary entry");
    if (!ids_.emplace(chars_[i], static_cast<int32_t>(i) + 2).second) {
      throw ConfigError("duplicate vocabulary character " + EncodeUtf8(chars_[i]));
    }
  }
}

int32_t CharVocab::Id(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnkId : it->second;
}

std::vector<int32_t> CharVocab::Encode(std::u32string_view text) const {
  std::vector<int32_t> ids;
  ids.reserve(text.size());
  for (char32_t c : text) ids.push_back(Id(c));
  return ids;
}

std::vector<std::string> CharVocab::Tokens() const {
  std::vector<std::string> tokens{EncodeUtf8(kPadChar), kUnkToken};
  for (char32_t c : chars_) tokens.push_back(EncodeUtf8(c));
  return tokens;
}

CharVocab CharVocab::FromTokens(std::span<const std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != EncodeUtf8(kPadChar) || tokens[1] != kUnkToken) {
    throw FormatError("vocabulary must start with the pad and unknown tokens");
  }
  std::vector<char32_t> chars;
  for (size_t i = 2; i < tokens.size(); ++i) {
    const auto cps = DecodeUtf8(tokens[i]);
    if (cps.size() != 1) throw FormatError("vocabulary token is not a single character");
    chars.push_back(cps[0]);
  }
  return CharVocab(std::move(chars));
}

CharVocab BuildCharVocab(std::span<const Sample> train_samples) {
  std::set<char32_t> seen;
  for (const auto &s : train_samples) {
    for (char32_t c : s.chars) {
      if (c != kPadChar) seen.insert(c);
    }
  }
  return CharVocab(std::vector<char32_t>(seen.begin(), seen.end()));
}

// --- Character embedding -------------------------------------------------------

CharEmbedding MakeCharEmbedding(int64_t num_chars, int64_t dim, Rng &rng) {
  CharEmbedding emb{InitParams({num_chars, dim}, InitScheme::kUniformGlorot, rng), true};
  std::fill(emb.table.row(kPadId), emb.table.row(kPadId) + dim, 0.0);
  return emb;
}

Tensor EmbedChars(const IdGrid &ids, const CharEmbedding &emb) {
  const int64_t dim = emb.dim();
  Tensor out({ids.rows, ids.cols, dim});
  for (int64_t r = 0; r < ids.rows; ++r) {
    for (int64_t t = 0; t < ids.cols; ++t) {
      const int32_t id = ids.at(r, t);
      if (id < 0 || id >= emb.num_chars()) {
        throw IndexError("character id " + std::to_string(id) + " outside table of " +
                         std::to_string(emb.num_chars()));
      }
      const double *src = emb.table.row(id);
      std::copy(src, src + dim, out.data() + (r * ids.cols + t) * dim);
    }
  }
  return out;
}

// --- Word vectors ----------------------------------------------------------

bool WordVecStore::Set(const std::string &word, std::span<const double> vec) {
  if (static_cast<int64_t>(vec.size()) != dim_) {
    throw ConfigError("word vector for '" + word + "' has dimension " +
                      std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
  }
  auto [it, inserted] = index_.emplace(word, static_cast<int>(words_.size()));
  if (inserted) {
    words_.push_back(word);
    data_.insert(data_.end(), vec.begin(), vec.end());
  } else {
    std::copy(vec.begin(), vec.end(), data_.begin() + it->second * dim_);
  }
  return !inserted;
}

std::optional<int> WordVecStore::Find(const std::string &word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> WordVecStore::Vector(int id) const {
  if (id < 0 || id >= size()) throw IndexError("word id " + std::to_string(id) + " out of range");
  return {data_.data() + id * dim_, static_cast<size_t>(dim_)};
}

WordVecStore ParseWordVectors(std::istream &in, std::vector<std::string> *warnings) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("word vectors: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream header(line);
  int64_t count = -1, dim = -1;
  if (!(header >> count >> dim) || count < 0 || dim <= 0) {
    throw FormatError("word vectors: header must be '<count> <dim>'");
  }
  if (dim != kWordVectorDim) {
    throw ConfigError("word vectors have dimension " + std::to_string(dim) + ", expected " +
                      std::to_string(kWordVectorDim));
  }

  WordVecStore store(dim);
  std::vector<double> vec(dim);
  int64_t read = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    const std::string where = "word vectors line " + std::to_string(line_no) + ": ";

    const char *p = line.data();
    const char *end = p + line.size();
    const char *tok_end = std::find(p, end, ' ');
    const std::string token(p, tok_end);
    p = tok_end;
    for (int64_t k = 0; k < dim; ++k) {
      while (p < end && *p == ' ') ++p;
      auto [next, ec] = std::from_chars(p, end, vec[k]);
      if (ec != std::errc() || (next < end && *next != ' ')) {
        throw FormatError(where + "malformed float in component " + std::to_string(k));
      }
      p = next;
    }
    while (p < end && *p == ' ') ++p;
    if (p != end) throw FormatError(where + "more than " + std::to_string(dim) + " components");

    if (store.Set(token, vec)) {
      const std::string msg = where + "duplicate token '" + token + "', keeping last";
      if (warnings) {
        warnings->push_back(msg);
      } else {
        std::cerr << "warning: " << msg << '\n';
      }
    }
    ++read;
  }
  if (read != count) {
    throw FormatError("word vectors: header announces " + std::to_string(count) +
                      " lines, found " + std::to_string(read));
  }
  return store;
}

WordVecStore LoadWordVectors(const std::filesystem::path &path,
                             std::vector<std::string> *warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return ParseWordVectors(in, warnings);
}

// --- Segmentation ----------------------------------------------------------

LongestMatchSegmenter::LongestMatchSegmenter(std::span<const std::u32string> words) {
  for (const auto &w : words) Add(w);
}

LongestMatchSegmenter LongestMatchSegmenter::FromStore(const WordVecStore &store) {
  LongestMatchSegmenter seg;
  for (const auto &w : store.words()) seg.Add(DecodeUtf8(w));
  return seg;
}

void LongestMatchSegmenter::Add(std::u32string word) {
  if (word.empty()) return;
  max_len_ = std::max(max_len_, word.size());
  words_.insert(std::move(word));
}

std::vector<Span> LongestMatchSegmenter::Segment(std::u32string_view sentence) const {
  std::vector<Span> spans;
  const size_t n = sentence.size();
  size_t i = 0;
  std::u32string probe;
  while (i < n) {
    size_t len = 1;
    for (size_t l = std::min(max_len_, n - i); l >= 2; --l) {
      probe.assign(sentence.substr(i, l));
      if (words_.count(probe)) {
        len = l;
        break;
      }
    }
    spans.push_back({static_cast<int>(i), static_cast<int>(i + len)});
    i += len;
  }
  return spans;
}

LongestMatchSegmenter LoadSegmenterDictionary(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  LongestMatchSegmenter seg;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) seg.Add(DecodeUtf8(line));
  }
  return seg;
}

std::vector<Span> Segment(std::u32string_view sentence,
                          std::span<const std::u32string> dictionary) {
  return LongestMatchSegmenter(dictionary).Segment(sentence);
}

Span ContainingSpan(std::span<const Span> spans, int index) {
  for (const auto &s : spans) {
    if (s.Contains(index)) return s;
  }
  throw IndexError("no span contains position " + std::to_string(index));
}

Span WordSpanFor(const Sample &sample, const Segmenter &segmenter) {
  if (sample.word_span) return *sample.word_span;
  return ContainingSpan(segmenter.Segment(sample.chars), sample.target_index);
}

std::optional<int> WordIdFor(const Sample &sample, std::span<const Span> spans,
                             const WordVecStore &store) {
  const Span span = ContainingSpan(spans, sample.target_index);
  return store.Find(EncodeUtf8(std::u32string_view(sample.chars).substr(span.start, span.size())));
}

Tensor WordCondition(const Sample &sample, std::span<const Span> spans,
                     const WordVecStore &store) {
  Tensor out({store.dim()});
  if (auto id = WordIdFor(sample, spans, store)) {
    const auto vec = store.Vector(*id);
    std::copy(vec.begin(), vec.end(), out.data());
  }
  return out;
}

std::vector<EncodedSample> EncodeSamples(std::span<const Sample> samples,
                                         const CharVocab &vocab,
                                         const WordVecStore *store,
                                         const Segmenter *segmenter) {
  std::optional<LongestMatchSegmenter> fallback;
  if (store && !segmenter) {
    fallback = LongestMatchSegmenter::FromStore(*store);
    segmenter = &*fallback;
  }
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto &s : samples) {
    EncodedSample e;
    e.char_ids = vocab.Encode(s.chars);
    e.target_index = s.target_index;
    e.gold = s.gold;
    e.target_char = s.target_char();
    if (store) {
      const Span span = WordSpanFor(s, *segmenter);
      const std::span<const Span> one(&span, 1);
      e.word_id = WordIdFor(s, one, *store).value_or(-1);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace polyphone
