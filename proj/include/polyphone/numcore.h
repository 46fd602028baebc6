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

#ifndef POLYPHONE_NUMCORE_H_
#define POLYPHONE_NUMCORE_H_

#include <cstdint>
#include <span>

#include "polyphone/rng.h"
#include "polyphone/tensor.h"

namespace polyphone {

// ---------------------------------------------------------------------------
// Initialization

enum class InitScheme { kUniformGlorot, kZeros };

// sqrt(6 / (fan_in + fan_out)). For a [rows x cols] weight fan_in = cols and
// fan_out = rows; rank-1 shapes use n for both.
double GlorotLimit(const Shape &shape);

Tensor InitParams(const Shape &shape, InitScheme scheme, Rng &rng);

// ---------------------------------------------------------------------------
// Fully connected layer

enum class Activation { kRelu, kNone };

struct DenseParams {
  Tensor w;  // [out x in]
  Tensor b;  // [out]
  Activation activation = Activation::kNone;

  int64_t in_dim() const { return w.dim(1); }
  int64_t out_dim() const { return w.dim(0); }
  void Validate() const;
};

DenseParams MakeDense(int64_t in_dim, int64_t out_dim, Activation act, Rng &rng);
DenseParams ZerosLike(const DenseParams &p);

// y = act(x W^T + b) for x of shape [B x in].
Tensor DenseForward(const Tensor &x, const DenseParams &p);

// Accumulates dW and db into `grads` and returns dL/dx. `y` is the forward
// output, used for the relu derivative.
Tensor DenseBackward(const Tensor &x, const Tensor &y, const Tensor &dy,
                     const DenseParams &p, DenseParams &grads);

// ---------------------------------------------------------------------------
// LSTM (no peepholes). The 4H rows of every parameter are laid out as
// input gate, forget gate, cell candidate, output gate.

struct LstmParams {
  Tensor w_x;  // [4H x D_in]
  Tensor w_h;  // [4H x H]
  Tensor b;    // [4H]

  int64_t hidden_size() const { return w_h.dim(1); }
  int64_t input_size() const { return w_x.dim(1); }
  void Validate() const;
};

// Glorot weights, zero bias except +1 on the forget gate.
LstmParams MakeLstm(int64_t input_size, int64_t hidden_size, Rng &rng);
LstmParams ZerosLike(const LstmParams &p);

struct LstmState {
  Tensor h;
  Tensor c;
};

// Single time step for one sample: x [D_in], h_prev [H], c_prev [H].
LstmState LstmCellStep(const Tensor &x, const Tensor &h_prev,
                       const Tensor &c_prev, const LstmParams &p);

// Everything a batched step needs to be differentiated later.
struct LstmStepCache {
  Tensor x;       // [B x D_in]
  Tensor h_prev;  // [B x H]
  Tensor c_prev;  // [B x H]
  Tensor gates;   // [B x 4H], post-activation (i, f, g, o)
  Tensor c;       // [B x H]
  Tensor tanh_c;  // [B x H]
  Tensor h;       // [B x H]
};

LstmStepCache LstmStepForward(Tensor x, Tensor h_prev, Tensor c_prev,
                              const LstmParams &p);

// Same step with x W_x^T + b already computed (e.g. for all steps at once).
// The returned cache has an empty `x`.
LstmStepCache LstmStepFromInput(Tensor input_gates, Tensor h_prev, Tensor c_prev,
                                const LstmParams &p);

struct LstmStepGrads {
  Tensor dx;
  Tensor dh_prev;
  Tensor dc_prev;
  Tensor dgates;  // [B x 4H], pre-activation
};

// Gate, h_prev and c_prev gradients only: leaves dx empty and touches no
// parameter gradient, so callers can batch those over time.
LstmStepGrads LstmStepBackwardRecurrent(const LstmStepCache &cache, const Tensor &dh,
                                        const Tensor &dc, const LstmParams &p);

// Backpropagates dL/dh and dL/dc of one step; accumulates into `grads`.
LstmStepGrads LstmStepBackward(const LstmStepCache &cache, const Tensor &dh,
                               const Tensor &dc, const LstmParams &p,
                               LstmParams &grads);

// ---------------------------------------------------------------------------
// Classification head

// Row-wise softmax over [B x K] with max subtraction.
Tensor Softmax(const Tensor &logits);

// Mean over rows of -log(max(p[b, target_b], 1e-12)).
double CrossEntropy(const Tensor &probs, std::span<const int> targets);

// Gradient of mean cross-entropy w.r.t. the logits that produced `probs`:
// (probs - onehot) / B.
Tensor SoftmaxCrossEntropyGrad(const Tensor &probs, std::span<const int> targets);

// ---------------------------------------------------------------------------
// Dropout (inverted: survivors are scaled by 1 / (1 - rate) at train time)

// Per-element multipliers, each 0 or 1 / (1 - rate). All ones, and no
// generator draws, when !training or rate == 0.
Tensor DropoutMask(const Shape &shape, double rate, bool training, Rng &rng);

Tensor Dropout(const Tensor &x, double rate, bool training, Rng &rng);

void ValidateDropoutRate(double rate);

// Elementwise helpers shared by the model.
void AddInPlace(Tensor &dst, const Tensor &src);
Tensor Multiply(const Tensor &a, const Tensor &b);

}  // namespace polyphone

#endif  // POLYPHONE_NUMCORE_H_
