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

#ifndef POLYPHONE_TENSOR_H_
#define POLYPHONE_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/StdVector>

namespace polyphone {

using Shape = std::vector<int64_t>;

std::string ShapeToString(const Shape &shape);

// Dense row-major array of doubles. Every dimension is positive and the
// element count always equals the product of the shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ZerosLike(const Tensor &other) { return Tensor(other.shape_); }

  const Shape &shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(i); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double &operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  double &at(int64_t i, int64_t j) { return data_[i * shape_[1] + j]; }
  double at(int64_t i, int64_t j) const { return data_[i * shape_[1] + j]; }
  double &at(int64_t i, int64_t j, int64_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(int64_t i, int64_t j, int64_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  // Pointer to the contiguous trailing block addressed by a leading index.
  double *row(int64_t i) { return data_.data() + i * RowStride(); }
  const double *row(int64_t i) const { return data_.data() + i * RowStride(); }

  void Fill(double value);
  bool AllFinite() const;

  // Same data, new shape with equal element count.
  Tensor Reshaped(Shape shape) const;

  bool operator==(const Tensor &other) const = default;

 private:
  int64_t RowStride() const;

  // Aligned storage: Eigen's vectorized reductions peel by address, so a
  // fixed alignment keeps results bitwise reproducible across runs.
  using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

  Shape shape_;
  Storage data_;
};

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// Views a tensor as [dim(0) x rest]; rank-1 tensors become a single row.
MatrixMap AsMatrix(Tensor &t);
ConstMatrixMap AsMatrix(const Tensor &t);
VectorMap AsVector(Tensor &t);
ConstVectorMap AsVector(const Tensor &t);

void RequireShape(const Tensor &t, const Shape &expected, const char *what);

}  // namespace polyphone

#endif  // POLYPHONE_TENSOR_H_
