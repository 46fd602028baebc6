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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "polyphone/errors.h"
#include "polyphone/rng.h"
#include "polyphone/utf8.h"

namespace polyphone {
namespace {

using nlohmann::json;

std::ifstream OpenForRead(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

void StripCr(std::string &line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> SplitOn(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

}  // namespace

// --- Lexicon -------------------------------------------------------------

bool IsValidPinyin(const std::string &pinyin) {
  std::u32string cps;
  try {
    cps = DecodeUtf8(pinyin);
  } catch (const FormatError &) {
    return false;
  }
  if (cps.size() < 2) return false;
  const char32_t tone = cps.back();
  if (tone < U'1' || tone > U'5') return false;
  for (size_t i = 0; i + 1 < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (!((c >= U'a' && c <= U'z') || c == U'ü')) return false;
  }
  return true;
}

Lexicon::Lexicon(std::map<char32_t, std::vector<std::string>> entries) {
  std::set<std::string> all;
  for (const auto &[c, pinyins] : entries) {
    if (pinyins.empty()) {
      throw FormatError("empty candidate list for " + EncodeUtf8(c));
    }
    std::set<std::string> seen;
    for (const auto &p : pinyins) {
      if (!IsValidPinyin(p)) throw FormatError("malformed pinyin '" + p + "'");
      if (!seen.insert(p).second) {
        throw FormatError("duplicate pinyin '" + p + "' for " + EncodeUtf8(c));
      }
      all.insert(p);
    }
  }
  inventory_.assign(all.begin(), all.end());
  for (size_t i = 0; i < inventory_.size(); ++i) {
    class_of_[inventory_[i]] = static_cast<int>(i);
  }
  for (const auto &[c, pinyins] : entries) {
    auto &ids = candidates_[c];
    for (const auto &p : pinyins) ids.push_back(class_of_.at(p));
  }
}

bool Lexicon::IsPolyphonic(char32_t c) const {
  auto it = candidates_.find(c);
  return it != candidates_.end() && it->second.size() > 1;
}

const std::vector<int> &Lexicon::Candidates(char32_t c) const {
  auto it = candidates_.find(c);
  if (it == candidates_.end()) {
    throw DomainError("character " + EncodeUtf8(c) + " is not in the lexicon");
  }
  return it->second;
}

std::vector<std::string> Lexicon::CandidatePinyins(char32_t c) const {
  std::vector<std::string> out;
  for (int id : Candidates(c)) out.push_back(inventory_[id]);
  return out;
}

std::optional<int> Lexicon::ClassOf(const std::string &pinyin) const {
  auto it = class_of_.find(pinyin);
  if (it == class_of_.end()) return std::nullopt;
  return it->second;
}

std::vector<char32_t> Lexicon::Characters() const {
  std::vector<char32_t> out;
  for (const auto &[c, ids] : candidates_) out.push_back(c);
  return out;
}

Lexicon ParseLexicon(std::istream &in) {
  std::map<char32_t, std::vector<std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const std::string where = "lexicon line " + std::to_string(line_no) + ": ";
    if (tab == std::string::npos) throw FormatError(where + "missing tab separator");
    std::u32string key;
    try {
      key = DecodeUtf8(line.substr(0, tab));
    } catch (const FormatError &e) {
      throw FormatError(where + e.what());
    }
    if (key.size() != 1) throw FormatError(where + "key must be a single character");
    const std::string rest = line.substr(tab + 1);
    if (rest.empty()) throw FormatError(where + "empty candidate list");
    std::vector<std::string> pinyins = SplitOn(rest, ',');
    for (const auto &p : pinyins) {
      if (p.empty()) throw FormatError(where + "empty pinyin in candidate list");
    }
    if (!entries.emplace(key[0], std::move(pinyins)).second) {
      throw FormatError(where + "duplicate character " + EncodeUtf8(key[0]));
    }
  }
  try {
    return Lexicon(std::move(entries));
  } catch (const FormatError &e) {
    throw FormatError(std::string("lexicon: ") + e.what());
  }
}

Lexicon LoadLexicon(const std::filesystem::path &path) {
  auto in = OpenForRead(path);
  return ParseLexicon(in);
}

// --- Corpus --------------------------------------------------------------

std::vector<Sample> ParseCorpus(std::istream &in, const Lexicon &lexicon) {
  std::vector<Sample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    StripCr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error &e) {
      throw AnnotationError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string() ||
        !record.contains("index") || !record["index"].is_number_integer() ||
        !record.contains("pinyin") || !record["pinyin"].is_string()) {
      throw AnnotationError(line_no, "record needs string 'text', integer 'index', string 'pinyin'");
    }

    Sample s;
    try {
      s.chars = DecodeUtf8(record["text"].get<std::string>());
    } catch (const FormatError &e) {
      throw AnnotationError(line_no, e.what());
    }
    const auto index = record["index"].get<int64_t>();
    if (index < 0 || index >= static_cast<int64_t>(s.chars.size())) {
      throw AnnotationError(line_no, "index " + std::to_string(index) +
                                         " outside text of length " +
                                         std::to_string(s.chars.size()));
    }
    s.target_index = static_cast<int>(index);
    const char32_t target = s.chars[s.target_index];
    if (!lexicon.Contains(target)) {
      throw AnnotationError(line_no, "character " + EncodeUtf8(target) + " not in lexicon");
    }
    if (!lexicon.IsPolyphonic(target)) {
      throw AnnotationError(line_no, "character " + EncodeUtf8(target) + " is not polyphonic");
    }
    const auto pinyin = record["pinyin"].get<std::string>();
    const auto cls = lexicon.ClassOf(pinyin);
    const auto &cands = lexicon.Candidates(target);
    if (!cls || std::find(cands.begin(), cands.end(), *cls) == cands.end()) {
      throw AnnotationError(line_no, "pinyin '" + pinyin + "' is not a candidate of " +
                                         EncodeUtf8(target));
    }
    s.gold = *cls;

    if (record.contains("word") && !record["word"].is_null()) {
      const auto &w = record["word"];
      if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() ||
          !w[1].is_number_integer()) {
        throw AnnotationError(line_no, "'word' must be [start, end]");
      }
      Span span{w[0].get<int>(), w[1].get<int>()};
      if (span.start < 0 || span.end > static_cast<int>(s.chars.size()) ||
          !span.Contains(s.target_index)) {
        throw AnnotationError(line_no, "word span must lie in the text and contain the index");
      }
      s.word_span = span;
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> LoadCorpus(const std::filesystem::path &path, const Lexicon &lexicon) {
  auto in = OpenForRead(path);
  return ParseCorpus(in, lexicon);
}

std::string SampleToJsonLine(const Sample &sample, const Lexicon &lexicon) {
  json record;
  record["text"] = EncodeUtf8(sample.chars);
  record["index"] = sample.target_index;
  record["pinyin"] = lexicon.Pinyin(sample.gold);
  if (sample.word_span) {
    record["word"] = {sample.word_span->start, sample.word_span->end};
  }
  return record.dump();
}

void WriteCorpus(std::ostream &out, std::span<const Sample> samples, const Lexicon &lexicon) {
  for (const auto &s : samples) out << SampleToJsonLine(s, lexicon) << '\n';
}

void SaveCorpus(const std::filesystem::path &path, std::span<const Sample> samples,
                const Lexicon &lexicon) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  WriteCorpus(out, samples, lexicon);
}

// --- Split ---------------------------------------------------------------

void SplitRule::Validate() const {
  auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_unit(eval_fraction_major) || !in_unit(eval_fraction_minor)) {
    throw ConfigError("split fractions must lie in (0, 1)");
  }
  if (minor_threshold < 0) throw ConfigError("minor threshold must be non-negative");
}

int EvalCountForPair(int count, const SplitRule &rule) {
  const double fraction =
      count < rule.minor_threshold ? rule.eval_fraction_minor : rule.eval_fraction_major;
  // std::round is half-away-from-zero.
  return static_cast<int>(std::round(fraction * count));
}

Split SplitDataset(std::span<const Sample> samples, const SplitRule &rule, uint64_t seed) {
  rule.Validate();
  std::map<std::pair<char32_t, int>, std::vector<size_t>> pairs;
  for (size_t i = 0; i < samples.size(); ++i) {
    pairs[{samples[i].target_char(), samples[i].gold}].push_back(i);
  }

  std::vector<bool> to_eval(samples.size(), false);
  uint64_t group = 0;
  for (const auto &[key, members] : pairs) {
    const int n_eval = EvalCountForPair(static_cast<int>(members.size()), rule);
    const auto order = ShuffledIndices(members.size(), MixSeed(seed, group++));
    for (int k = 0; k < n_eval; ++k) to_eval[members[order[k]]] = true;
  }

  Split split;
  for (size_t i = 0; i < samples.size(); ++i) {
    (to_eval[i] ? split.eval : split.train).push_back(samples[i]);
  }
  return split;
}

// --- Batching ------------------------------------------------------------

std::vector<size_t> ShuffledIndices(size_t n, uint64_t seed) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.UniformInt(i)]);
  }
  return idx;
}

std::vector<Batch> MakeBatches(std::span<const EncodedSample> samples, int batch_size,
                               int32_t pad_id, uint64_t seed, bool shuffle) {
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  std::vector<size_t> order;
  if (shuffle) {
    order = ShuffledIndices(samples.size(), seed);
  } else {
    order.resize(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  }

  std::vector<Batch> batches;
  for (size_t begin = 0; begin < order.size(); begin += batch_size) {
    const size_t end = std::min(order.size(), begin + static_cast<size_t>(batch_size));
    Batch b;
    int64_t max_len = 0;
    for (size_t k = begin; k < end; ++k) {
      max_len = std::max<int64_t>(max_len, samples[order[k]].char_ids.size());
    }
    if (max_len == 0) throw ShapeError("cannot batch an empty sentence");
    b.char_ids.rows = static_cast<int64_t>(end - begin);
    b.char_ids.cols = max_len;
    b.char_ids.ids.assign(b.char_ids.rows * max_len, pad_id);
    for (size_t k = begin; k < end; ++k) {
      const auto &s = samples[order[k]];
      const int64_t r = static_cast<int64_t>(k - begin);
      std::copy(s.char_ids.begin(), s.char_ids.end(), b.char_ids.ids.begin() + r * max_len);
      b.lengths.push_back(static_cast<int>(s.char_ids.size()));
      b.target_indices.push_back(s.target_index);
      b.word_ids.push_back(s.word_id);
      b.gold.push_back(s.gold);
      b.target_chars.push_back(s.target_char);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace polyphone
