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

#include "polyphone/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "polyphone/errors.h"

namespace polyphone {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  void Bytes(const void *p, size_t n) { out_.append(static_cast<const char *>(p), n); }
  void U32(uint32_t v) { Bytes(&v, sizeof v); }
  void U64(uint64_t v) { Bytes(&v, sizeof v); }
  void Str(const std::string &s) {
    U32(static_cast<uint32_t>(s.size()));
    Bytes(s.data(), s.size());
  }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string &in) : in_(in) {}

  void Bytes(void *p, size_t n) {
    if (n > in_.size() - pos_) throw FormatError("checkpoint truncated");
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t U32() {
    uint32_t v;
    Bytes(&v, sizeof v);
    return v;
  }
  uint64_t U64() {
    uint64_t v;
    Bytes(&v, sizeof v);
    return v;
  }
  std::string Str() {
    const uint32_t n = U32();
    if (n > in_.size() - pos_) throw FormatError("checkpoint truncated");
    std::string s(in_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  size_t remaining() const { return in_.size() - pos_; }

 private:
  const std::string &in_;
  size_t pos_ = 0;
};

// Builds a ModelParams skeleton whose tensors are filled by name.
ModelParams Skeleton(Variant variant) {
  ModelParams p;
  p.variant = variant;
  if (UsesSentenceCondition(variant)) p.encoder.emplace();
  p.predictor.fc1.activation = Activation::kRelu;
  p.predictor.fc2.activation = Activation::kRelu;
  p.predictor.fc3.activation = Activation::kNone;
  return p;
}

}  // namespace

std::string SerializeCheckpoint(const Model &model) {
  model.params.Validate();
  Writer w;
  w.Bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.U32(kCheckpointVersion);
  w.U32(static_cast<uint32_t>(model.params.variant));
  const auto tokens = model.vocab.Tokens();
  w.U32(static_cast<uint32_t>(tokens.size()));
  for (const auto &t : tokens) w.Str(t);
  w.U32(static_cast<uint32_t>(model.pinyins.size()));
  for (const auto &p : model.pinyins) w.Str(p);
  const auto named = model.params.Named();
  w.U32(static_cast<uint32_t>(named.size()));
  for (const auto &[name, tensor] : named) {
    w.Str(name);
    w.U32(static_cast<uint32_t>(tensor->rank()));
    for (int64_t d : tensor->shape()) w.U64(static_cast<uint64_t>(d));
    w.Bytes(tensor->data(), sizeof(double) * tensor->size());
  }
  return w.Take();
}

Model DeserializeCheckpoint(const std::string &bytes, std::optional<Variant> expected) {
  Reader r(bytes);
  char magic[4];
  r.Bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t tag = r.U32();
  if (tag > static_cast<uint32_t>(Variant::kCWC)) {
    throw FormatError("unknown variant tag " + std::to_string(tag));
  }
  const auto variant = static_cast<Variant>(tag);
  if (expected && *expected != variant) {
    throw ConfigError("checkpoint holds variant " + std::string(VariantName(variant)) +
                      ", expected " + std::string(VariantName(*expected)));
  }

  Model model;
  std::vector<std::string> tokens(r.U32());
  for (auto &t : tokens) t = r.Str();
  model.vocab = CharVocab::FromTokens(tokens);
  model.pinyins.resize(r.U32());
  for (auto &p : model.pinyins) p = r.Str();

  model.params = Skeleton(variant);
  std::map<std::string, Tensor *> slots;
  for (auto &[name, tensor] : model.params.Named()) slots[name] = tensor;
  const uint32_t count = r.U32();
  if (count != slots.size()) {
    throw FormatError("checkpoint has " + std::to_string(count) + " tensors, variant " +
                      std::string(VariantName(variant)) + " needs " +
                      std::to_string(slots.size()));
  }
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = r.Str();
    auto it = slots.find(name);
    if (it == slots.end()) throw FormatError("unexpected tensor '" + name + "'");
    const uint32_t rank = r.U32();
    if (rank == 0 || rank > 3) throw FormatError("tensor '" + name + "' has bad rank");
    Shape shape(rank);
    uint64_t n = 1;
    for (auto &d : shape) {
      const uint64_t dim = r.U64();
      if (dim == 0 || dim > (uint64_t{1} << 32)) {
        throw FormatError("tensor '" + name + "' has bad dimension");
      }
      d = static_cast<int64_t>(dim);
      n *= dim;
    }
    if (n > r.remaining() / sizeof(double)) throw FormatError("checkpoint truncated");
    std::vector<double> data(n);
    r.Bytes(data.data(), n * sizeof(double));
    *it->second = Tensor(std::move(shape), std::move(data));
    slots.erase(it);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");

  try {
    model.params.Validate();
  } catch (const Error &e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what());
  }
  if (model.params.char_embedding.num_chars() != model.vocab.size()) {
    throw FormatError("embedding rows do not match vocabulary size");
  }
  if (model.params.predictor.fc3.out_dim() != model.num_classes()) {
    throw FormatError("output width does not match pinyin inventory");
  }
  return model;
}

void SaveCheckpoint(const Model &model, const std::filesystem::path &path) {
  const std::string bytes = SerializeCheckpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

Model LoadCheckpoint(const std::filesystem::path &path, std::optional<Variant> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DeserializeCheckpoint(bytes, expected);
}

}  // namespace polyphone
