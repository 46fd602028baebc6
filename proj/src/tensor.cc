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

#include "polyphone/tensor.h"

#include <cmath>
#include <sstream>

#include "polyphone/errors.h"

namespace polyphone {
namespace {

int64_t CheckedProduct(const Shape &shape) {
  if (shape.empty()) throw ShapeError("tensor shape must be non-empty");
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) {
      throw ShapeError("non-positive dimension in shape " + ShapeToString(shape));
    }
    n *= d;
  }
  return n;
}

}  // namespace

std::string ShapeToString(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(CheckedProduct(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (CheckedProduct(shape_) != static_cast<int64_t>(data_.size())) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeToString(shape_));
  }
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::Reshaped(Shape shape) const {
  Tensor out;
  if (CheckedProduct(shape) != size()) {
    throw ShapeError("cannot reshape " + ShapeToString(shape_) + " to " + ShapeToString(shape));
  }
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

int64_t Tensor::RowStride() const {
  return shape_.empty() ? 0 : size() / shape_[0];
}

MatrixMap AsMatrix(Tensor &t) {
  const int64_t rows = t.rank() == 1 ? 1 : t.dim(0);
  return MatrixMap(t.data(), rows, t.size() / rows);
}

ConstMatrixMap AsMatrix(const Tensor &t) {
  const int64_t rows = t.rank() == 1 ? 1 : t.dim(0);
  return ConstMatrixMap(t.data(), rows, t.size() / rows);
}

VectorMap AsVector(Tensor &t) { return VectorMap(t.data(), t.size()); }

ConstVectorMap AsVector(const Tensor &t) {
  return ConstVectorMap(t.data(), t.size());
}

void RequireShape(const Tensor &t, const Shape &expected, const char *what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected " + ShapeToString(expected) +
                     ", got " + ShapeToString(t.shape()));
  }
}

}  // namespace polyphone
