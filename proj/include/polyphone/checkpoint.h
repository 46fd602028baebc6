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

#ifndef POLYPHONE_CHECKPOINT_H_
#define POLYPHONE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "polyphone/model.h"

namespace polyphone {

inline constexpr char kCheckpointMagic[4] = {'P', 'G', 'Q', 'P'};
inline constexpr uint32_t kCheckpointVersion = 1;

// Binary layout, all integers and floats little-endian:
//
//   "PGQP"                 4 bytes
//   version                u32
//   variant                u32  (0 = cw, 1 = cc, 2 = cwc)
//   vocab size             u32, then per token: u32 byte length + UTF-8
//   inventory size         u32, then per pinyin: u32 byte length + UTF-8
//   tensor count           u32, then per tensor:
//       u32 name length, name bytes, u32 rank, rank x u64 dims, f64 data
//
// Tensors appear in ModelParams::Named() order.
std::string SerializeCheckpoint(const Model &model);

// Throws FormatError on bad magic, unknown version or truncation and
// ConfigError when `expected` is given and the stored variant differs.
Model DeserializeCheckpoint(const std::string &bytes,
                            std::optional<Variant> expected = std::nullopt);

void SaveCheckpoint(const Model &model, const std::filesystem::path &path);
Model LoadCheckpoint(const std::filesystem::path &path,
                     std::optional<Variant> expected = std::nullopt);

}  // namespace polyphone

#endif  // POLYPHONE_CHECKPOINT_H_
