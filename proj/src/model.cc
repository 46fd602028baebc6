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

#include "polyphone/model.h"

#include <algorithm>

#include "polyphone/errors.h"

namespace polyphone {
namespace {

void CheckBatch(const Batch &batch) {
  const auto rows = static_cast<size_t>(batch.size());
  if (batch.lengths.size() != rows || batch.target_indices.size() != rows ||
      batch.word_ids.size() != rows || batch.gold.size() != rows) {
    throw ShapeError("batch fields disagree on the batch size");
  }
  for (size_t b = 0; b < rows; ++b) {
    if (batch.lengths[b] <= 0 || batch.lengths[b] > batch.max_len()) {
      throw ShapeError("batch row length outside [1, L_max]");
    }
  }
}

// Position of step `s` for a row of length `len` in the given direction.
int StepPosition(bool reverse, int s, int len) { return reverse ? len - 1 - s : s; }

// Gathers the direction's inputs step-major: row s * B + b holds the
// embedding fed to row b at step s (zeros once the row has ended).
Tensor GatherStepInputs(const Tensor &embedded, std::span<const int> lengths, bool reverse,
                        int steps) {
  const int64_t batch = embedded.dim(0);
  const int64_t max_len = embedded.dim(1);
  const int64_t dim = embedded.dim(2);
  Tensor x({steps * batch, dim});
  for (int s = 0; s < steps; ++s) {
    for (int64_t b = 0; b < batch; ++b) {
      if (s >= lengths[b]) continue;
      const int pos = StepPosition(reverse, s, lengths[b]);
      const double *src = embedded.data() + (b * max_len + pos) * dim;
      std::copy(src, src + dim, x.row(s * batch + b));
    }
  }
  return x;
}

void RunDirection(const Tensor &embedded, std::span<const int> lengths,
                  const LstmParams &p, bool reverse, int64_t column_offset,
                  Tensor &out, BlstmDirectionCache &cache) {
  const int64_t batch = embedded.dim(0);
  const int64_t max_len = embedded.dim(1);
  const int64_t hs = p.hidden_size();
  const int64_t out_width = out.dim(2);
  const int longest = *std::max_element(lengths.begin(), lengths.end());

  cache.inputs = GatherStepInputs(embedded, lengths, reverse, longest);
  Tensor pre({longest * batch, 4 * hs});
  auto pm = AsMatrix(pre);
  pm.noalias() = AsMatrix(cache.inputs) * AsMatrix(p.w_x).transpose();
  pm.rowwise() += AsVector(p.b).transpose();

  Tensor h({batch, hs});
  Tensor c({batch, hs});
  cache.steps.clear();
  cache.steps.reserve(longest);
  for (int s = 0; s < longest; ++s) {
    Tensor gates({batch, 4 * hs});
    std::copy(pre.row(s * batch), pre.row(s * batch) + batch * 4 * hs, gates.data());
    cache.steps.push_back(LstmStepFromInput(std::move(gates), std::move(h), std::move(c), p));
    const auto &step = cache.steps.back();
    for (int64_t b = 0; b < batch; ++b) {
      if (s >= lengths[b]) continue;
      const int pos = StepPosition(reverse, s, lengths[b]);
      const double *src = step.h.row(b);
      std::copy(src, src + hs, out.data() + (b * max_len + pos) * out_width + column_offset);
    }
    h = step.h;
    c = step.c;
  }
}

void BackwardDirection(const BlstmDirectionCache &cache, std::span<const int> lengths,
                       const Tensor &d_out, const LstmParams &p, bool reverse,
                       int64_t column_offset, LstmParams &grads, Tensor &d_embedded) {
  const int64_t batch = d_out.dim(0);
  const int64_t max_len = d_out.dim(1);
  const int64_t out_width = d_out.dim(2);
  const int64_t dim = d_embedded.dim(2);
  const int64_t hs = p.hidden_size();
  const int steps = static_cast<int>(cache.steps.size());

  // Step-major stacks so the parameter gradients are one product each.
  Tensor d_gates({steps * batch, 4 * hs});
  Tensor h_prev({steps * batch, hs});
  Tensor dh_next({batch, hs});
  Tensor dc_next({batch, hs});
  for (int s = steps - 1; s >= 0; --s) {
    Tensor dh = std::move(dh_next);
    for (int64_t b = 0; b < batch; ++b) {
      if (s >= lengths[b]) continue;
      const int pos = StepPosition(reverse, s, lengths[b]);
      const double *src = d_out.data() + (b * max_len + pos) * out_width + column_offset;
      double *dst = dh.row(b);
      for (int64_t j = 0; j < hs; ++j) dst[j] += src[j];
    }
    auto g = LstmStepBackwardRecurrent(cache.steps[s], dh, dc_next, p);
    std::copy(g.dgates.data(), g.dgates.data() + g.dgates.size(), d_gates.row(s * batch));
    const Tensor &hp = cache.steps[s].h_prev;
    std::copy(hp.data(), hp.data() + hp.size(), h_prev.row(s * batch));
    dh_next = std::move(g.dh_prev);
    dc_next = std::move(g.dc_prev);
  }

  const auto dg = AsMatrix(d_gates);
  AsMatrix(grads.w_x).noalias() += dg.transpose() * AsMatrix(cache.inputs);
  AsMatrix(grads.w_h).noalias() += dg.transpose() * AsMatrix(h_prev);
  AsVector(grads.b).noalias() += dg.colwise().sum().transpose();
  Tensor dx({steps * batch, dim});
  AsMatrix(dx).noalias() = dg * AsMatrix(p.w_x);
  for (int s = 0; s < steps; ++s) {
    for (int64_t b = 0; b < batch; ++b) {
      if (s >= lengths[b]) continue;
      const int pos = StepPosition(reverse, s, lengths[b]);
      const double *src = dx.row(s * batch + b);
      double *dst = d_embedded.data() + (b * max_len + pos) * dim;
      for (int64_t j = 0; j < dim; ++j) dst[j] += src[j];
    }
  }
}

void ScatterRows(const Tensor &src, int64_t src_offset, int64_t width, int64_t b,
                 Tensor &dst, int64_t dst_row) {
  const double *s = src.row(b) + src_offset;
  double *d = dst.row(dst_row);
  for (int64_t j = 0; j < width; ++j) d[j] += s[j];
}

}  // namespace

std::string_view VariantName(Variant v) {
  switch (v) {
    case Variant::kCW:
      return "cw";
    case Variant::kCC:
      return "cc";
    case Variant::kCWC:
      return "cwc";
  }
  return "?";
}

Variant ParseVariant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cw") return Variant::kCW;
  if (lower == "cc") return Variant::kCC;
  if (lower == "cwc") return Variant::kCWC;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected cw, cc or cwc)");
}

bool UsesWordCondition(Variant v) { return v != Variant::kCC; }
bool UsesSentenceCondition(Variant v) { return v != Variant::kCW; }

int64_t ConditionWidth(Variant v, const ModelDims &dims) {
  int64_t width = dims.char_dim;
  if (UsesWordCondition(v)) width += dims.word_dim;
  if (UsesSentenceCondition(v)) width += dims.sentence_dim();
  return width;
}

// --- Parameters --------------------------------------------------------------

std::vector<NamedTensor> ModelParams::Named() {
  std::vector<NamedTensor> out{{"char_embedding", &char_embedding.table}};
  if (encoder) {
    for (auto [prefix, lstm] : {std::pair{"encoder.fw.", &encoder->fw},
                                std::pair{"encoder.bw.", &encoder->bw}}) {
      out.push_back({std::string(prefix) + "w_x", &lstm->w_x});
      out.push_back({std::string(prefix) + "w_h", &lstm->w_h});
      out.push_back({std::string(prefix) + "b", &lstm->b});
    }
  }
  for (auto [prefix, dense] : {std::pair{"predictor.fc1.", &predictor.fc1},
                               std::pair{"predictor.fc2.", &predictor.fc2},
                               std::pair{"predictor.fc3.", &predictor.fc3}}) {
    out.push_back({std::string(prefix) + "w", &dense->w});
    out.push_back({std::string(prefix) + "b", &dense->b});
  }
  return out;
}

std::vector<ConstNamedTensor> ModelParams::Named() const {
  std::vector<ConstNamedTensor> out;
  for (const auto &nt : const_cast<ModelParams *>(this)->Named()) {
    out.push_back({nt.name, nt.tensor});
  }
  return out;
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams z;
  z.variant = variant;
  z.char_embedding = {Tensor::ZerosLike(char_embedding.table), char_embedding.trainable};
  if (encoder) {
    z.encoder = EncoderParams{polyphone::ZerosLike(encoder->fw),
                              polyphone::ZerosLike(encoder->bw), encoder->dropout_rate};
  }
  z.predictor = {polyphone::ZerosLike(predictor.fc1), polyphone::ZerosLike(predictor.fc2),
                 polyphone::ZerosLike(predictor.fc3), predictor.dropout_rate};
  return z;
}

ModelDims ModelParams::Dims() const {
  ModelDims d;
  d.char_dim = char_embedding.dim();
  d.hidden = encoder ? encoder->fw.hidden_size() : d.hidden;
  d.fc1 = predictor.fc1.out_dim();
  d.fc2 = predictor.fc2.out_dim();
  d.num_classes = predictor.fc3.out_dim();
  const int64_t c = predictor.fc1.in_dim();
  if (variant == Variant::kCW) d.word_dim = c - d.char_dim;
  if (variant == Variant::kCWC) d.word_dim = c - d.char_dim - d.sentence_dim();
  d.encoder_dropout = encoder ? encoder->dropout_rate : d.encoder_dropout;
  d.fc_dropout = predictor.dropout_rate;
  return d;
}

void ModelParams::Validate() const {
  if (char_embedding.table.rank() != 2) throw ShapeError("char embedding must be rank 2");
  if (char_embedding.num_chars() < 2) throw ShapeError("char embedding needs pad and unk rows");
  if (UsesSentenceCondition(variant) != encoder.has_value()) {
    throw ConfigError(std::string("variant ") + std::string(VariantName(variant)) +
                      (encoder ? " must not have" : " requires") + " a sentence encoder");
  }
  if (encoder) {
    encoder->fw.Validate();
    encoder->bw.Validate();
    if (encoder->fw.input_size() != char_embedding.dim() ||
        encoder->bw.input_size() != char_embedding.dim()) {
      throw ShapeError("encoder input width must equal the char embedding width");
    }
    if (encoder->fw.hidden_size() != encoder->bw.hidden_size()) {
      throw ShapeError("forward and backward LSTM sizes differ");
    }
  }
  predictor.fc1.Validate();
  predictor.fc2.Validate();
  predictor.fc3.Validate();
  if (predictor.fc2.in_dim() != predictor.fc1.out_dim() ||
      predictor.fc3.in_dim() != predictor.fc2.out_dim()) {
    throw ShapeError("predictor layer widths do not chain");
  }
  const ModelDims d = Dims();
  if (d.word_dim <= 0 && UsesWordCondition(variant)) {
    throw ShapeError("fc1 input width leaves no room for the word condition");
  }
  if (predictor.fc1.in_dim() != ConditionWidth(variant, d)) {
    throw ShapeError("fc1 input width does not match the variant's condition width");
  }
}

ModelParams InitModelParams(Variant variant, int64_t num_chars, const ModelDims &dims,
                            Rng &rng) {
  ValidateDropoutRate(dims.encoder_dropout);
  ValidateDropoutRate(dims.fc_dropout);
  ModelParams p;
  p.variant = variant;
  p.char_embedding = MakeCharEmbedding(num_chars, dims.char_dim, rng);
  if (UsesSentenceCondition(variant)) {
    EncoderParams enc;
    enc.fw = MakeLstm(dims.char_dim, dims.hidden, rng);
    enc.bw = MakeLstm(dims.char_dim, dims.hidden, rng);
    enc.dropout_rate = dims.encoder_dropout;
    p.encoder = std::move(enc);
  }
  p.predictor.fc1 = MakeDense(ConditionWidth(variant, dims), dims.fc1, Activation::kRelu, rng);
  p.predictor.fc2 = MakeDense(dims.fc1, dims.fc2, Activation::kRelu, rng);
  p.predictor.fc3 = MakeDense(dims.fc2, dims.num_classes, Activation::kNone, rng);
  p.predictor.dropout_rate = dims.fc_dropout;
  return p;
}

// --- Encoder -------------------------------------------------------------------

Tensor BlstmEncode(const Tensor &embedded, std::span<const int> lengths,
                   const EncoderParams &enc, bool training, Rng &rng, BlstmCache *cache) {
  if (embedded.rank() != 3) throw ShapeError("encoder input must be [B x L x D]");
  if (static_cast<int64_t>(lengths.size()) != embedded.dim(0)) {
    throw ShapeError("one length per batch row required");
  }
  for (int len : lengths) {
    if (len <= 0 || len > embedded.dim(1)) throw ShapeError("sequence length outside [1, L]");
  }
  if (enc.fw.input_size() != embedded.dim(2) || enc.bw.input_size() != embedded.dim(2)) {
    throw ShapeError("encoder input width " + std::to_string(embedded.dim(2)) +
                     " does not match LSTM input size");
  }

  Tensor out({embedded.dim(0), embedded.dim(1), enc.output_dim()});
  BlstmCache local;
  BlstmCache &c = cache ? *cache : local;
  c.lengths.assign(lengths.begin(), lengths.end());
  RunDirection(embedded, lengths, enc.fw, false, 0, out, c.fw);
  RunDirection(embedded, lengths, enc.bw, true, enc.fw.hidden_size(), out, c.bw);

  c.dropout_mask = DropoutMask(out.shape(), enc.dropout_rate, training, rng);
  if (training && enc.dropout_rate > 0.0) out = Multiply(out, c.dropout_mask);
  return out;
}

Tensor BlstmBackward(const BlstmCache &cache, const Tensor &d_output,
                     const EncoderParams &enc, EncoderParams &grads) {
  RequireShape(d_output, cache.dropout_mask.shape(), "encoder output gradient");
  const Tensor d_raw = Multiply(d_output, cache.dropout_mask);
  const int64_t dim = enc.fw.input_size();
  Tensor d_embedded({d_output.dim(0), d_output.dim(1), dim});
  BackwardDirection(cache.fw, cache.lengths, d_raw, enc.fw, false, 0, grads.fw, d_embedded);
  BackwardDirection(cache.bw, cache.lengths, d_raw, enc.bw, true, enc.fw.hidden_size(),
                    grads.bw, d_embedded);
  return d_embedded;
}

Tensor SelectPosition(const Tensor &enc, std::span<const int> targets,
                      std::span<const int> lengths) {
  if (enc.rank() != 3) throw ShapeError("encoding must be [B x L x D]");
  const int64_t batch = enc.dim(0);
  if (static_cast<int64_t>(targets.size()) != batch ||
      static_cast<int64_t>(lengths.size()) != batch) {
    throw ShapeError("one target and length per batch row required");
  }
  const int64_t width = enc.dim(2);
  Tensor out({batch, width});
  for (int64_t b = 0; b < batch; ++b) {
    if (targets[b] < 0 || targets[b] >= lengths[b] || lengths[b] > enc.dim(1)) {
      throw IndexError("target position " + std::to_string(targets[b]) +
                       " outside sentence of length " + std::to_string(lengths[b]));
    }
    const double *src = enc.data() + (b * enc.dim(1) + targets[b]) * width;
    std::copy(src, src + width, out.row(b));
  }
  return out;
}

Tensor AssembleCondition(Variant variant, const Tensor &char_emb, const Tensor *word_vec,
                         const Tensor *sent_enc) {
  if (char_emb.rank() != 2) throw ShapeError("char embedding input must be [B x D_c]");
  std::vector<const Tensor *> parts{&char_emb};
  if (UsesWordCondition(variant)) {
    if (!word_vec) {
      throw ConfigError("variant " + std::string(VariantName(variant)) +
                        " needs the word-level condition");
    }
    parts.push_back(word_vec);
  }
  if (UsesSentenceCondition(variant)) {
    if (!sent_enc) {
      throw ConfigError("variant " + std::string(VariantName(variant)) +
                        " needs the sentence-level condition");
    }
    parts.push_back(sent_enc);
  }
  const int64_t batch = char_emb.dim(0);
  int64_t width = 0;
  for (const Tensor *t : parts) {
    if (t->rank() != 2 || t->dim(0) != batch) {
      throw ShapeError("condition parts disagree on the batch size");
    }
    width += t->dim(1);
  }
  Tensor out({batch, width});
  for (int64_t b = 0; b < batch; ++b) {
    double *dst = out.row(b);
    for (const Tensor *t : parts) {
      dst = std::copy(t->row(b), t->row(b) + t->dim(1), dst);
    }
  }
  return out;
}

// --- Prediction network --------------------------------------------------------

Tensor Predict(const Tensor &cond, const PredictorParams &p, bool training, Rng &rng,
               PredictorCache *cache) {
  if (cond.rank() != 2 || cond.dim(1) != p.fc1.in_dim()) {
    throw ShapeError("condition width " +
                     (cond.rank() == 2 ? std::to_string(cond.dim(1)) : std::string("?")) +
                     " does not match fc1 input " + std::to_string(p.fc1.in_dim()));
  }
  PredictorCache local;
  PredictorCache &c = cache ? *cache : local;
  const bool drop = training && p.dropout_rate > 0.0;
  c.input = cond;
  c.h1 = DenseForward(cond, p.fc1);
  c.mask1 = DropoutMask(c.h1.shape(), p.dropout_rate, training, rng);
  c.d1 = drop ? Multiply(c.h1, c.mask1) : c.h1;
  c.h2 = DenseForward(c.d1, p.fc2);
  c.mask2 = DropoutMask(c.h2.shape(), p.dropout_rate, training, rng);
  c.d2 = drop ? Multiply(c.h2, c.mask2) : c.h2;
  c.logits = DenseForward(c.d2, p.fc3);
  return c.logits;
}

Tensor PredictBackward(const PredictorCache &c, const Tensor &d_logits,
                       const PredictorParams &p, PredictorParams &grads) {
  const Tensor dd2 = DenseBackward(c.d2, c.logits, d_logits, p.fc3, grads.fc3);
  const Tensor dd1 = DenseBackward(c.d1, c.h2, Multiply(dd2, c.mask2), p.fc2, grads.fc2);
  return DenseBackward(c.input, c.h1, Multiply(dd1, c.mask1), p.fc1, grads.fc1);
}

// --- Whole graph ---------------------------------------------------------------

ForwardResult Forward(const Batch &batch, const ModelParams &params,
                      const WordVecStore *words, bool training, Rng &rng) {
  CheckBatch(batch);
  const int64_t bsz = batch.size();
  const int64_t char_dim = params.char_embedding.dim();
  ForwardResult r;
  ForwardCache &c = r.cache;

  c.embedded = EmbedChars(batch.char_ids, params.char_embedding);
  c.char_vec = Tensor({bsz, char_dim});
  for (int64_t b = 0; b < bsz; ++b) {
    const int t = batch.target_indices[b];
    if (t < 0 || t >= batch.lengths[b]) {
      throw IndexError("target index " + std::to_string(t) + " outside sentence");
    }
    const double *src = c.embedded.data() + (b * batch.max_len() + t) * char_dim;
    std::copy(src, src + char_dim, c.char_vec.row(b));
  }

  const Variant v = params.variant;
  if (UsesWordCondition(v)) {
    if (!words) {
      throw ConfigError("variant " + std::string(VariantName(v)) + " needs word vectors");
    }
    const int64_t word_dim = params.Dims().word_dim;
    if (words->dim() != word_dim) {
      throw ShapeError("word vectors have dimension " + std::to_string(words->dim()) +
                       ", model expects " + std::to_string(word_dim));
    }
    c.word_vec = Tensor({bsz, word_dim});
    for (int64_t b = 0; b < bsz; ++b) {
      if (batch.word_ids[b] < 0) continue;
      const auto vec = words->Vector(batch.word_ids[b]);
      std::copy(vec.begin(), vec.end(), c.word_vec.row(b));
    }
  }
  if (UsesSentenceCondition(v)) {
    c.encoded = BlstmEncode(c.embedded, batch.lengths, *params.encoder, training, rng, &c.blstm);
    c.sentence = SelectPosition(c.encoded, batch.target_indices, batch.lengths);
  }
  c.condition = AssembleCondition(v, c.char_vec, UsesWordCondition(v) ? &c.word_vec : nullptr,
                                  UsesSentenceCondition(v) ? &c.sentence : nullptr);
  r.logits = Predict(c.condition, params.predictor, training, rng, &c.predictor);
  return r;
}

void Backward(const Batch &batch, const ModelParams &params, const ForwardCache &cache,
              const Tensor &d_logits, ModelParams &grads) {
  const int64_t bsz = batch.size();
  const int64_t char_dim = params.char_embedding.dim();
  const Tensor d_cond = PredictBackward(cache.predictor, d_logits, params.predictor,
                                        grads.predictor);
  Tensor &d_table = grads.char_embedding.table;
  for (int64_t b = 0; b < bsz; ++b) {
    const int32_t id = batch.char_ids.at(b, batch.target_indices[b]);
    ScatterRows(d_cond, 0, char_dim, b, d_table, id);
  }

  if (!UsesSentenceCondition(params.variant)) return;
  int64_t offset = char_dim;
  if (UsesWordCondition(params.variant)) offset += cache.word_vec.dim(1);
  const int64_t width = params.encoder->output_dim();
  Tensor d_encoded(cache.encoded.shape());
  for (int64_t b = 0; b < bsz; ++b) {
    const double *src = d_cond.row(b) + offset;
    double *dst = d_encoded.data() + (b * batch.max_len() + batch.target_indices[b]) * width;
    std::copy(src, src + width, dst);
  }
  const Tensor d_embedded = BlstmBackward(cache.blstm, d_encoded, *params.encoder,
                                          *grads.encoder);
  for (int64_t b = 0; b < bsz; ++b) {
    for (int t = 0; t < batch.lengths[b]; ++t) {
      const double *src = d_embedded.data() + (b * batch.max_len() + t) * char_dim;
      double *dst = d_table.row(batch.char_ids.at(b, t));
      for (int64_t j = 0; j < char_dim; ++j) dst[j] += src[j];
    }
  }
}

double LossAndGradients(const Batch &batch, const ModelParams &params,
                        const WordVecStore *words, bool training, Rng &rng,
                        ModelParams *grads) {
  auto fwd = Forward(batch, params, words, training, rng);
  const Tensor probs = Softmax(fwd.logits);
  const double loss = CrossEntropy(probs, batch.gold);
  if (grads) {
    *grads = params.ZerosLike();
    Backward(batch, params, fwd.cache, SoftmaxCrossEntropyGrad(probs, batch.gold), *grads);
  }
  return loss;
}

int Argmax(std::span<const double> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace polyphone
