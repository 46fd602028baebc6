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

#ifndef POLYPHONE_TRAIN_H_
#define POLYPHONE_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polyphone/corpus.h"
#include "polyphone/features.h"
#include "polyphone/model.h"

namespace polyphone {

// Unit of the counter the learning-rate schedule decays on.
enum class DecayUnit { kEpochs, kSteps };

struct TrainConfig {
  Variant variant = Variant::kCWC;
  int batch_size = 32;
  uint64_t seed = 1;
  double lr0 = 0.1;
  int64_t decay_interval = 600;
  double decay_factor = 0.1;
  double lr_floor = 1e-4;
  DecayUnit decay_unit = DecayUnit::kEpochs;
  int max_epochs = 10;
  // Stop after this many epochs without a better eval accuracy; 0 disables.
  int patience = 0;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
  ModelDims dims;  // num_classes is taken from the lexicon by Fit()

  void Validate() const;
};

// Reads the JSON object form of TrainConfig. Unknown keys are rejected.
// Keys: batch_size, seed, lr0, decay_interval, decay_factor, lr_floor,
// decay_unit ("epochs" | "steps"), max_epochs, patience, clip_norm,
// dropout (sets both rates), encoder_dropout, fc_dropout, char_dim, hidden,
// fc1, fc2, variant.
TrainConfig ParseTrainConfig(const std::string &json_text, TrainConfig base = {});

// max(lr_floor, lr0 * decay_factor ^ floor(t / decay_interval)).
double LrAt(int64_t t, const TrainConfig &cfg);

// theta -= lr * grad for every trainable tensor. The pad row of the
// embedding gradient is zeroed first, so the pad embedding never moves.
void SgdStep(ModelParams &params, ModelParams &grads, double lr);

// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns
// the norm before clipping.
double ClipGlobalNorm(ModelParams &grads, double max_norm);

struct TrainState {
  int64_t epoch = 0;
  int64_t step = 0;
  double lr = 0.0;
  double best_eval_accuracy = -1.0;
  Model model;
};

struct EpochStats {
  double mean_loss = 0.0;
  int64_t steps = 0;
  double last_lr = 0.0;
};

// One pass over `train` in a seeded shuffle of (seed, epoch). Throws
// NumericError naming the batch and learning rate on a non-finite loss.
EpochStats TrainEpoch(TrainState &state, std::span<const EncodedSample> train,
                      const WordVecStore *words, const TrainConfig &cfg);

struct HistoryRow {
  int64_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double eval_acc = 0.0;
};

std::string HistoryRowToJson(const HistoryRow &row);
void WriteHistory(const std::filesystem::path &path, std::span<const HistoryRow> rows);

struct FitResult {
  Model best;
  int64_t best_epoch = -1;
  double best_eval_accuracy = 0.0;
  std::vector<HistoryRow> history;
};

// Builds the vocabulary from `train`, initializes the model and trains for
// up to cfg.max_epochs, keeping the parameters with the best eval accuracy
// (earliest on ties). With max_epochs == 0 the initial model is returned.
FitResult Fit(std::span<const Sample> train, std::span<const Sample> eval,
              const Lexicon &lexicon, const WordVecStore *words, const Segmenter *segmenter,
              const TrainConfig &cfg,
              const std::function<void(const HistoryRow &)> &on_epoch = nullptr);

// Fresh model for `train` with the config's dimensions and seed.
Model InitModel(std::span<const Sample> train, const Lexicon &lexicon, const TrainConfig &cfg);

}  // namespace polyphone

#endif  // POLYPHONE_TRAIN_H_
