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

#include "polyphone/model_check.h"

#include <vector>

namespace polyphone {

ModelDims GradCheckDims() {
  ModelDims d;
  d.char_dim = 5;
  d.word_dim = 4;
  d.hidden = 3;
  d.fc1 = 6;
  d.fc2 = 7;
  d.num_classes = 4;
  d.encoder_dropout = 0.0;
  d.fc_dropout = 0.0;
  return d;
}

GradCheckReport CheckModelGradients(Variant variant, const ModelDims &dims, uint64_t seed,
                                    const GradCheckOptions &options) {
  constexpr int kNumChars = 9;
  Rng rng(seed);
  ModelDims no_dropout = dims;
  no_dropout.encoder_dropout = 0.0;
  no_dropout.fc_dropout = 0.0;
  ModelParams params = InitModelParams(variant, kNumChars, no_dropout, rng);
  for (auto &[name, t] : params.Named()) {
    if (name.ends_with(".b")) {
      for (double &v : t->values()) v += rng.Uniform(-0.5, 0.5);
    }
  }

  WordVecStore words(dims.word_dim);
  std::vector<double> vec(dims.word_dim);
  for (const char *w : {"ab", "cd"}) {
    for (double &v : vec) v = rng.Uniform(-1.0, 1.0);
    words.Set(w, vec);
  }

  // Rows of length 5 and 3, padded to 5; the second row uses no word vector.
  Batch batch;
  batch.char_ids = {2, 5, {}};
  for (int t = 0; t < 5; ++t) batch.char_ids.ids.push_back(2 + static_cast<int>(rng.UniformInt(kNumChars - 2)));
  for (int t = 0; t < 3; ++t) batch.char_ids.ids.push_back(2 + static_cast<int>(rng.UniformInt(kNumChars - 2)));
  batch.char_ids.ids.push_back(0);
  batch.char_ids.ids.push_back(0);
  batch.lengths = {5, 3};
  batch.target_indices = {2, 1};
  batch.word_ids = {0, -1};
  batch.gold = {1, static_cast<int>(dims.num_classes) - 1};
  batch.target_chars = {U'a', U'b'};

  Rng unused(0);
  ModelParams grads;
  LossAndGradients(batch, params, &words, false, unused, &grads);

  std::vector<GradCheckEntry> entries;
  auto p = params.Named();
  auto g = grads.Named();
  for (size_t i = 0; i < p.size(); ++i) entries.push_back({p[i].name, p[i].tensor, g[i].tensor});
  return GradCheck(
      [&] { return LossAndGradients(batch, params, &words, false, unused, nullptr); }, entries,
      options);
}

}  // namespace polyphone
