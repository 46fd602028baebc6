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

#ifndef POLYPHONE_MODEL_H_
#define POLYPHONE_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polyphone/corpus.h"
#include "polyphone/features.h"
#include "polyphone/numcore.h"

namespace polyphone {

// Which conditions accompany the target character embedding:
//   CW  - word vector
//   CC  - BLSTM sentence encoding
//   CWC - both
enum class Variant { kCW = 0, kCC = 1, kCWC = 2 };

std::string_view VariantName(Variant v);  // "cw", "cc", "cwc"
Variant ParseVariant(std::string_view name);
bool UsesWordCondition(Variant v);
bool UsesSentenceCondition(Variant v);

// Layer widths. The defaults are the full-size model; tests shrink
// them to keep exhaustive gradient checks fast.
struct ModelDims {
  int64_t char_dim = kCharEmbeddingDim;
  int64_t word_dim = kWordVectorDim;
  int64_t hidden = 256;  // per direction
  int64_t fc1 = 512;
  int64_t fc2 = 1024;
  int64_t num_classes = 285;
  double encoder_dropout = 0.1;
  double fc_dropout = 0.1;

  int64_t sentence_dim() const { return 2 * hidden; }
};

// Concatenated condition width C: 300 (CW), 612 (CC), 812 (CWC) at the
// default sizes.
int64_t ConditionWidth(Variant v, const ModelDims &dims);

struct EncoderParams {
  LstmParams fw;
  LstmParams bw;
  double dropout_rate = 0.1;

  int64_t output_dim() const { return fw.hidden_size() + bw.hidden_size(); }
};

struct PredictorParams {
  DenseParams fc1;  // C -> 512, relu
  DenseParams fc2;  // 512 -> 1024, relu
  DenseParams fc3;  // 1024 -> K, linear
  double dropout_rate = 0.1;
};

struct NamedTensor {
  std::string name;
  Tensor *tensor;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor *tensor;
};

struct ModelParams {
  Variant variant = Variant::kCWC;
  CharEmbedding char_embedding;
  std::optional<EncoderParams> encoder;  // absent for CW
  PredictorParams predictor;

  // Every tensor in a fixed order with stable dotted names
  // ("char_embedding", "encoder.fw.w_x", ..., "predictor.fc3.b").
  std::vector<NamedTensor> Named();
  std::vector<ConstNamedTensor> Named() const;

  // Same structure, all zeros. Used as the gradient accumulator.
  ModelParams ZerosLike() const;

  ModelDims Dims() const;
  void Validate() const;
};

ModelParams InitModelParams(Variant variant, int64_t num_chars, const ModelDims &dims,
                            Rng &rng);

// Parameters bundled with the vocabulary and class inventory they index.
struct Model {
  ModelParams params;
  CharVocab vocab;
  std::vector<std::string> pinyins;

  Variant variant() const { return params.variant; }
  int num_classes() const { return static_cast<int>(pinyins.size()); }
};

// ---------------------------------------------------------------------------
// Forward pieces

struct BlstmDirectionCache {
  Tensor inputs;  // [S*B x D], step-major
  std::vector<LstmStepCache> steps;
  bool empty() const { return steps.empty(); }
};

struct BlstmCache {
  BlstmDirectionCache fw;
  BlstmDirectionCache bw;
  std::vector<int> lengths;
  Tensor dropout_mask;  // [B x L x 2H]
};

// Runs the forward LSTM over t = 0..len-1 and the backward LSTM over
// t = len-1..0 of every row, using each row's true length. Output is
// [B x L x 2H] with fw in the first H columns; padded positions are zero.
// Dropout hits the outputs when training.
Tensor BlstmEncode(const Tensor &embedded, std::span<const int> lengths,
                   const EncoderParams &enc, bool training, Rng &rng,
                   BlstmCache *cache = nullptr);

// Returns dL/d(embedded) and accumulates parameter gradients.
Tensor BlstmBackward(const BlstmCache &cache, const Tensor &d_output,
                     const EncoderParams &enc, EncoderParams &grads);

// Row b of the result is enc[b, target_b, :]; this is the one-hot product
// z^T * enc[b] evaluated as a gather.
Tensor SelectPosition(const Tensor &enc, std::span<const int> targets,
                      std::span<const int> lengths);

// [char | word | sentence], omitting the parts the variant does not use.
Tensor AssembleCondition(Variant variant, const Tensor &char_emb, const Tensor *word_vec,
                         const Tensor *sent_enc);

struct PredictorCache {
  Tensor input;
  Tensor h1, mask1, d1;
  Tensor h2, mask2, d2;
  Tensor logits;
};

// fc1 (relu) -> dropout -> fc2 (relu) -> dropout -> fc3. Returns logits.
Tensor Predict(const Tensor &cond, const PredictorParams &p, bool training, Rng &rng,
               PredictorCache *cache = nullptr);

Tensor PredictBackward(const PredictorCache &cache, const Tensor &d_logits,
                       const PredictorParams &p, PredictorParams &grads);

// ---------------------------------------------------------------------------
// Whole graph

struct ForwardCache {
  Tensor embedded;   // [B x L x D_c]
  Tensor char_vec;   // [B x D_c]
  Tensor word_vec;   // [B x D_w], CW/CWC only
  Tensor encoded;    // [B x L x 2H], CC/CWC only
  Tensor sentence;   // [B x 2H], CC/CWC only
  Tensor condition;  // [B x C]
  BlstmCache blstm;
  PredictorCache predictor;
};

struct ForwardResult {
  Tensor logits;  // [B x K]
  ForwardCache cache;
};

// `words` may be null for CC; rows with word id -1 get a zero vector.
ForwardResult Forward(const Batch &batch, const ModelParams &params,
                      const WordVecStore *words, bool training, Rng &rng);

// Accumulates dL/dparams into `grads` given dL/dlogits. The word vectors
// are frozen and receive no gradient.
void Backward(const Batch &batch, const ModelParams &params, const ForwardCache &cache,
              const Tensor &d_logits, ModelParams &grads);

// Mean cross-entropy of the batch; fills `grads` (zeroed first) when given.
double LossAndGradients(const Batch &batch, const ModelParams &params,
                        const WordVecStore *words, bool training, Rng &rng,
                        ModelParams *grads);

// Argmax with ties to the lowest index.
int Argmax(std::span<const double> row);

}  // namespace polyphone

#endif  // POLYPHONE_MODEL_H_
