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

#include "polyphone/train.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "polyphone/errors.h"
#include "polyphone/eval.h"

namespace polyphone {
namespace {

constexpr uint64_t kDropoutSalt = 0xd5a61266f0c9392cULL;
constexpr uint64_t kShuffleSalt = 0x2545f4914f6cdd1dULL;

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(decay_factor > 0.0 && decay_factor < 1.0)) {
    throw ConfigError("decay_factor must lie in (0, 1)");
  }
  if (!(lr_floor > 0.0 && lr_floor < lr0)) throw ConfigError("lr_floor must lie in (0, lr0)");
  if (decay_interval <= 0) throw ConfigError("decay_interval must be positive");
  if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
  if (patience < 0) throw ConfigError("patience must be non-negative");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
  ValidateDropoutRate(dims.encoder_dropout);
  ValidateDropoutRate(dims.fc_dropout);
  if (dims.char_dim <= 0 || dims.hidden <= 0 || dims.fc1 <= 0 || dims.fc2 <= 0) {
    throw ConfigError("layer sizes must be positive");
  }
}

TrainConfig ParseTrainConfig(const std::string &json_text, TrainConfig cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto &[key, v] : j.items()) {
      if (key == "batch_size") cfg.batch_size = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<uint64_t>();
      else if (key == "lr0") cfg.lr0 = v.get<double>();
      else if (key == "decay_interval") cfg.decay_interval = v.get<int64_t>();
      else if (key == "decay_factor") cfg.decay_factor = v.get<double>();
      else if (key == "lr_floor") cfg.lr_floor = v.get<double>();
      else if (key == "max_epochs") cfg.max_epochs = v.get<int>();
      else if (key == "patience") cfg.patience = v.get<int>();
      else if (key == "clip_norm") cfg.clip_norm = v.get<double>();
      else if (key == "dropout") cfg.dims.encoder_dropout = cfg.dims.fc_dropout = v.get<double>();
      else if (key == "encoder_dropout") cfg.dims.encoder_dropout = v.get<double>();
      else if (key == "fc_dropout") cfg.dims.fc_dropout = v.get<double>();
      else if (key == "char_dim") cfg.dims.char_dim = v.get<int64_t>();
      else if (key == "hidden") cfg.dims.hidden = v.get<int64_t>();
      else if (key == "fc1") cfg.dims.fc1 = v.get<int64_t>();
      else if (key == "fc2") cfg.dims.fc2 = v.get<int64_t>();
      else if (key == "variant") cfg.variant = ParseVariant(v.get<std::string>());
      else if (key == "decay_unit") {
        const auto unit = v.get<std::string>();
        if (unit == "epochs") cfg.decay_unit = DecayUnit::kEpochs;
        else if (unit == "steps") cfg.decay_unit = DecayUnit::kSteps;
        else throw ConfigError("decay_unit must be \"epochs\" or \"steps\"");
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::type_error &e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  cfg.Validate();
  return cfg;
}

double LrAt(int64_t t, const TrainConfig &cfg) {
  if (t < 0) throw ConfigError("schedule position must be non-negative");
  const int64_t stage = t / cfg.decay_interval;
  const double lr = cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(stage));
  // pow() rounding can leave lr a hair above the floor; snap it.
  return lr < cfg.lr_floor * (1.0 + 1e-9) ? cfg.lr_floor : lr;
}

void SgdStep(ModelParams &params, ModelParams &grads, double lr) {
  auto &pad = grads.char_embedding.table;
  if (!pad.empty()) std::fill(pad.row(kPadId), pad.row(kPadId) + pad.dim(1), 0.0);

  auto p = params.Named();
  auto g = grads.Named();
  if (p.size() != g.size()) throw ShapeError("gradient structure does not match parameters");
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i].name != g[i].name) throw ShapeError("gradient structure does not match parameters");
    RequireShape(*g[i].tensor, p[i].tensor->shape(), p[i].name.c_str());
    if (i == 0 && !params.char_embedding.trainable) continue;
    AsVector(*p[i].tensor) -= lr * AsVector(*g[i].tensor);
  }
}

double ClipGlobalNorm(ModelParams &grads, double max_norm) {
  double sq = 0.0;
  for (const auto &[name, t] : grads.Named()) sq += AsVector(*t).squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto &[name, t] : grads.Named()) AsVector(*t) *= scale;
  }
  return norm;
}

EpochStats TrainEpoch(TrainState &state, std::span<const EncodedSample> train,
                      const WordVecStore *words, const TrainConfig &cfg) {
  const auto batches = MakeBatches(train, cfg.batch_size, kPadId,
                                   MixSeed(cfg.seed ^ kShuffleSalt, state.epoch), true);
  Rng dropout_rng(MixSeed(cfg.seed ^ kDropoutSalt, state.epoch));
  ModelParams &params = state.model.params;
  ModelParams grads;
  EpochStats stats;
  double loss_sum = 0.0;
  for (size_t i = 0; i < batches.size(); ++i) {
    const double lr =
        LrAt(cfg.decay_unit == DecayUnit::kEpochs ? state.epoch : state.step, cfg);
    const double loss = LossAndGradients(batches[i], params, words, true, dropout_rng, &grads);
    if (!std::isfinite(loss)) {
      std::ostringstream os;
      os << "non-finite loss at epoch " << state.epoch << ", batch " << i << " (lr " << lr
         << ")";
      throw NumericError(os.str());
    }
    if (cfg.clip_norm > 0.0) ClipGlobalNorm(grads, cfg.clip_norm);
    SgdStep(params, grads, lr);
    loss_sum += loss;
    ++state.step;
    ++stats.steps;
    stats.last_lr = lr;
  }
  stats.mean_loss = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
  ++state.epoch;
  state.lr = LrAt(cfg.decay_unit == DecayUnit::kEpochs ? state.epoch : state.step, cfg);
  return stats;
}

std::string HistoryRowToJson(const HistoryRow &row) {
  nlohmann::json j;
  j["epoch"] = row.epoch;
  j["lr"] = row.lr;
  j["loss"] = row.loss;
  j["eval_acc"] = row.eval_acc;
  return j.dump();
}

void WriteHistory(const std::filesystem::path &path, std::span<const HistoryRow> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto &r : rows) out << HistoryRowToJson(r) << '\n';
}

Model InitModel(std::span<const Sample> train, const Lexicon &lexicon, const TrainConfig &cfg) {
  cfg.Validate();
  if (train.empty()) throw ConfigError("training set is empty");
  Model model;
  model.vocab = BuildCharVocab(train);
  model.pinyins = lexicon.inventory();
  ModelDims dims = cfg.dims;
  dims.num_classes = lexicon.num_classes();
  Rng rng(cfg.seed);
  model.params = InitModelParams(cfg.variant, model.vocab.size(), dims, rng);
  return model;
}

FitResult Fit(std::span<const Sample> train, std::span<const Sample> eval,
              const Lexicon &lexicon, const WordVecStore *words, const Segmenter *segmenter,
              const TrainConfig &cfg, const std::function<void(const HistoryRow &)> &on_epoch) {
  TrainState state;
  state.model = InitModel(train, lexicon, cfg);
  state.lr = LrAt(0, cfg);

  FitResult result;
  result.best = state.model;
  if (cfg.max_epochs == 0) return result;
  if (eval.empty()) throw ConfigError("evaluation set is empty");
  if (UsesWordCondition(cfg.variant) && !words) {
    throw ConfigError("variant " + std::string(VariantName(cfg.variant)) +
                      " needs word vectors");
  }
  const WordVecStore *store = UsesWordCondition(cfg.variant) ? words : nullptr;
  const auto train_enc = EncodeSamples(train, state.model.vocab, store, segmenter);
  const auto eval_enc = EncodeSamples(eval, state.model.vocab, store, segmenter);

  int stale = 0;
  for (int e = 0; e < cfg.max_epochs; ++e) {
    HistoryRow row;
    row.epoch = state.epoch;
    const auto stats = TrainEpoch(state, train_enc, store, cfg);
    row.lr = cfg.decay_unit == DecayUnit::kEpochs ? LrAt(row.epoch, cfg) : stats.last_lr;
    row.loss = stats.mean_loss;
    const auto preds = PredictClasses(state.model, store, eval_enc);
    int correct = 0;
    for (size_t i = 0; i < preds.size(); ++i) correct += preds[i] == eval_enc[i].gold;
    row.eval_acc = static_cast<double>(correct) / static_cast<double>(eval_enc.size());
    result.history.push_back(row);
    if (on_epoch) on_epoch(row);

    if (row.eval_acc > state.best_eval_accuracy) {
      state.best_eval_accuracy = row.eval_acc;
      result.best = state.model;
      result.best_epoch = row.epoch;
      result.best_eval_accuracy = row.eval_acc;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace polyphone
