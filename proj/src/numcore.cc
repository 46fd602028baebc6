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

#include "polyphone/numcore.h"

#include <algorithm>
#include <cmath>

#include "polyphone/errors.h"

namespace polyphone {
namespace {

constexpr double kLogClamp = 1e-12;

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void CheckTargets(const Tensor &probs, std::span<const int> targets) {
  if (probs.rank() != 2) throw ShapeError("expected [B x K] probabilities");
  if (static_cast<int64_t>(targets.size()) != probs.dim(0)) {
    throw ShapeError("target count does not match batch size");
  }
  for (int t : targets) {
    if (t < 0 || t >= probs.dim(1)) {
      throw IndexError("target class " + std::to_string(t) + " outside [0, " +
                       std::to_string(probs.dim(1)) + ")");
    }
  }
}

}  // namespace

double GlorotLimit(const Shape &shape) {
  if (shape.empty()) throw ShapeError("empty shape");
  double fan_in, fan_out;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else {
    fan_out = static_cast<double>(shape[0]);
    fan_in = 1.0;
    for (size_t i = 1; i < shape.size(); ++i) fan_in *= static_cast<double>(shape[i]);
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor InitParams(const Shape &shape, InitScheme scheme, Rng &rng) {
  Tensor t(shape);
  if (scheme == InitScheme::kZeros) return t;
  const double r = GlorotLimit(shape);
  for (double &v : t.values()) v = rng.Uniform(-r, r);
  return t;
}

// --- Dense -----------------------------------------------------------------

void DenseParams::Validate() const {
  if (w.rank() != 2) throw ShapeError("dense weight must be rank 2");
  RequireShape(b, {w.dim(0)}, "dense bias");
}

DenseParams MakeDense(int64_t in_dim, int64_t out_dim, Activation act, Rng &rng) {
  DenseParams p;
  p.w = InitParams({out_dim, in_dim}, InitScheme::kUniformGlorot, rng);
  p.b = Tensor({out_dim});
  p.activation = act;
  return p;
}

DenseParams ZerosLike(const DenseParams &p) {
  return {Tensor::ZerosLike(p.w), Tensor::ZerosLike(p.b), p.activation};
}

Tensor DenseForward(const Tensor &x, const DenseParams &p) {
  p.Validate();
  if (x.rank() != 2 || x.dim(1) != p.in_dim()) {
    throw ShapeError("dense input " + ShapeToString(x.shape()) +
                     " does not match weight " + ShapeToString(p.w.shape()));
  }
  Tensor y({x.dim(0), p.out_dim()});
  auto ym = AsMatrix(y);
  ym.noalias() = AsMatrix(x) * AsMatrix(p.w).transpose();
  ym.rowwise() += AsVector(p.b).transpose();
  if (p.activation == Activation::kRelu) ym = ym.cwiseMax(0.0);
  return y;
}

Tensor DenseBackward(const Tensor &x, const Tensor &y, const Tensor &dy,
                     const DenseParams &p, DenseParams &grads) {
  RequireShape(dy, y.shape(), "dense output gradient");
  Tensor da = dy;
  if (p.activation == Activation::kRelu) {
    for (int64_t i = 0; i < da.size(); ++i) {
      if (y[i] <= 0.0) da[i] = 0.0;
    }
  }
  const auto dam = AsMatrix(da);
  AsMatrix(grads.w).noalias() += dam.transpose() * AsMatrix(x);
  AsVector(grads.b).noalias() += dam.colwise().sum().transpose();
  Tensor dx(x.shape());
  AsMatrix(dx).noalias() = dam * AsMatrix(p.w);
  return dx;
}

// --- LSTM ------------------------------------------------------------------

void LstmParams::Validate() const {
  if (w_x.rank() != 2 || w_h.rank() != 2) throw ShapeError("lstm weights must be rank 2");
  const int64_t h = w_h.dim(1);
  RequireShape(w_h, {4 * h, h}, "lstm recurrent weight");
  if (w_x.dim(0) != 4 * h) throw ShapeError("lstm input weight must have 4H rows");
  RequireShape(b, {4 * h}, "lstm bias");
}

LstmParams MakeLstm(int64_t input_size, int64_t hidden_size, Rng &rng) {
  LstmParams p;
  p.w_x = InitParams({4 * hidden_size, input_size}, InitScheme::kUniformGlorot, rng);
  p.w_h = InitParams({4 * hidden_size, hidden_size}, InitScheme::kUniformGlorot, rng);
  p.b = Tensor({4 * hidden_size});
  for (int64_t j = hidden_size; j < 2 * hidden_size; ++j) p.b[j] = 1.0;
  return p;
}

LstmParams ZerosLike(const LstmParams &p) {
  return {Tensor::ZerosLike(p.w_x), Tensor::ZerosLike(p.w_h), Tensor::ZerosLike(p.b)};
}

LstmStepCache LstmStepForward(Tensor x, Tensor h_prev, Tensor c_prev,
                              const LstmParams &p) {
  p.Validate();
  if (x.rank() != 2 || x.dim(1) != p.input_size()) {
    throw ShapeError("lstm input " + ShapeToString(x.shape()) + " expects width " +
                     std::to_string(p.input_size()));
  }
  Tensor pre({x.dim(0), 4 * p.hidden_size()});
  auto pm = AsMatrix(pre);
  pm.noalias() = AsMatrix(x) * AsMatrix(p.w_x).transpose();
  pm.rowwise() += AsVector(p.b).transpose();
  LstmStepCache s = LstmStepFromInput(std::move(pre), std::move(h_prev), std::move(c_prev), p);
  s.x = std::move(x);
  return s;
}

LstmStepCache LstmStepFromInput(Tensor input_gates, Tensor h_prev, Tensor c_prev,
                                const LstmParams &p) {
  const int64_t hs = p.hidden_size();
  const int64_t batch = input_gates.dim(0);
  RequireShape(input_gates, {batch, 4 * hs}, "lstm input gates");
  RequireShape(h_prev, {batch, hs}, "lstm h_prev");
  RequireShape(c_prev, {batch, hs}, "lstm c_prev");

  LstmStepCache s;
  s.gates = std::move(input_gates);
  AsMatrix(s.gates).noalias() += AsMatrix(h_prev) * AsMatrix(p.w_h).transpose();

  s.c = Tensor({batch, hs});
  s.tanh_c = Tensor({batch, hs});
  s.h = Tensor({batch, hs});
  for (int64_t r = 0; r < batch; ++r) {
    double *g = s.gates.row(r);
    const double *cp = c_prev.row(r);
    double *c = s.c.row(r);
    double *tc = s.tanh_c.row(r);
    double *h = s.h.row(r);
    for (int64_t j = 0; j < hs; ++j) {
      const double ig = Sigmoid(g[j]);
      const double fg = Sigmoid(g[hs + j]);
      const double cand = std::tanh(g[2 * hs + j]);
      const double og = Sigmoid(g[3 * hs + j]);
      g[j] = ig;
      g[hs + j] = fg;
      g[2 * hs + j] = cand;
      g[3 * hs + j] = og;
      c[j] = fg * cp[j] + ig * cand;
      tc[j] = std::tanh(c[j]);
      h[j] = og * tc[j];
    }
  }
  s.h_prev = std::move(h_prev);
  s.c_prev = std::move(c_prev);
  return s;
}

LstmState LstmCellStep(const Tensor &x, const Tensor &h_prev, const Tensor &c_prev,
                       const LstmParams &p) {
  if (x.rank() != 1 || h_prev.rank() != 1 || c_prev.rank() != 1) {
    throw ShapeError("LstmCellStep takes rank-1 inputs");
  }
  auto s = LstmStepForward(x.Reshaped({1, x.size()}), h_prev.Reshaped({1, h_prev.size()}),
                           c_prev.Reshaped({1, c_prev.size()}), p);
  return {s.h.Reshaped({s.h.size()}), s.c.Reshaped({s.c.size()})};
}

LstmStepGrads LstmStepBackwardRecurrent(const LstmStepCache &s, const Tensor &dh,
                                        const Tensor &dc, const LstmParams &p) {
  RequireShape(dh, s.h.shape(), "lstm dh");
  RequireShape(dc, s.c.shape(), "lstm dc");
  const int64_t batch = s.h.dim(0);
  const int64_t hs = p.hidden_size();

  LstmStepGrads out;
  out.dgates = Tensor({batch, 4 * hs});
  out.dc_prev = Tensor({batch, hs});
  for (int64_t r = 0; r < batch; ++r) {
    const double *g = s.gates.row(r);
    const double *tc = s.tanh_c.row(r);
    const double *cp = s.c_prev.row(r);
    const double *dhr = dh.row(r);
    const double *dcr = dc.row(r);
    double *dg = out.dgates.row(r);
    double *dcp = out.dc_prev.row(r);
    for (int64_t j = 0; j < hs; ++j) {
      const double ig = g[j], fg = g[hs + j], cand = g[2 * hs + j], og = g[3 * hs + j];
      const double dcell = dcr[j] + dhr[j] * og * (1.0 - tc[j] * tc[j]);
      dg[j] = dcell * cand * ig * (1.0 - ig);
      dg[hs + j] = dcell * cp[j] * fg * (1.0 - fg);
      dg[2 * hs + j] = dcell * ig * (1.0 - cand * cand);
      dg[3 * hs + j] = dhr[j] * tc[j] * og * (1.0 - og);
      dcp[j] = dcell * fg;
    }
  }
  out.dh_prev = Tensor(s.h_prev.shape());
  AsMatrix(out.dh_prev).noalias() = AsMatrix(out.dgates) * AsMatrix(p.w_h);
  return out;
}

LstmStepGrads LstmStepBackward(const LstmStepCache &s, const Tensor &dh,
                               const Tensor &dc, const LstmParams &p,
                               LstmParams &grads) {
  LstmStepGrads out = LstmStepBackwardRecurrent(s, dh, dc, p);
  const auto dgm = AsMatrix(out.dgates);
  AsMatrix(grads.w_x).noalias() += dgm.transpose() * AsMatrix(s.x);
  AsMatrix(grads.w_h).noalias() += dgm.transpose() * AsMatrix(s.h_prev);
  AsVector(grads.b).noalias() += dgm.colwise().sum().transpose();
  out.dx = Tensor(s.x.shape());
  AsMatrix(out.dx).noalias() = dgm * AsMatrix(p.w_x);
  return out;
}

// --- Softmax / cross-entropy ---------------------------------------------

Tensor Softmax(const Tensor &logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [B x K]");
  Tensor out(logits.shape());
  const int64_t k = logits.dim(1);
  for (int64_t r = 0; r < logits.dim(0); ++r) {
    const double *in = logits.row(r);
    double *o = out.row(r);
    const double mx = *std::max_element(in, in + k);
    double sum = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (int64_t j = 0; j < k; ++j) o[j] /= sum;
  }
  return out;
}

double CrossEntropy(const Tensor &probs, std::span<const int> targets) {
  CheckTargets(probs, targets);
  double total = 0.0;
  for (int64_t r = 0; r < probs.dim(0); ++r) {
    total -= std::log(std::max(probs.at(r, targets[r]), kLogClamp));
  }
  return total / static_cast<double>(probs.dim(0));
}

Tensor SoftmaxCrossEntropyGrad(const Tensor &probs, std::span<const int> targets) {
  CheckTargets(probs, targets);
  Tensor grad = probs;
  const double scale = 1.0 / static_cast<double>(probs.dim(0));
  for (int64_t r = 0; r < probs.dim(0); ++r) grad.at(r, targets[r]) -= 1.0;
  for (double &v : grad.values()) v *= scale;
  return grad;
}

// --- Dropout ---------------------------------------------------------------

void ValidateDropoutRate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

Tensor DropoutMask(const Shape &shape, double rate, bool training, Rng &rng) {
  ValidateDropoutRate(rate);
  Tensor mask(shape, 1.0);
  if (!training || rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double &v : mask.values()) v = rng.Uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Tensor Dropout(const Tensor &x, double rate, bool training, Rng &rng) {
  ValidateDropoutRate(rate);
  if (!training || rate == 0.0) return x;
  return Multiply(x, DropoutMask(x.shape(), rate, training, rng));
}

void AddInPlace(Tensor &dst, const Tensor &src) {
  RequireShape(src, dst.shape(), "AddInPlace");
  AsVector(dst) += AsVector(src);
}

Tensor Multiply(const Tensor &a, const Tensor &b) {
  RequireShape(b, a.shape(), "Multiply");
  Tensor out(a.shape());
  AsVector(out) = AsVector(a).cwiseProduct(AsVector(b));
  return out;
}

}  // namespace polyphone
