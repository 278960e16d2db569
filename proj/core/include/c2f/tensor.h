// Copyright 2026 The c2f Authors
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

#ifndef C2F_TENSOR_H_
#define C2F_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace c2f {

// Raised whenever operand extents disagree or a shape is malformed.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for arguments outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

std::string ShapeString(const Shape& shape);
std::size_t ShapeSize(const Shape& shape);

// Dense row-major array of doubles. Rank-2 tensors are the workhorse: rows
// index batch elements, columns index flattened features.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor Vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Leading extent for rank >= 2, otherwise 1.
  std::size_t rows() const;
  // Product of all trailing extents after the leading one (rank >= 2), or
  // the full size for rank 1.
  std::size_t cols() const;

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  Tensor Reshaped(Shape shape) const;
  void Fill(double v);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

void RequireSameShape(const Tensor& a, const Tensor& b, std::string_view what);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
// Elementwise (Hadamard) product.
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

// a[B x n] . b[n x k]
Tensor MatMul(const Tensor& a, const Tensor& b);

double Sum(const Tensor& a);
double Mean(const Tensor& a);
double MaxAbs(const Tensor& a);
bool AllFinite(const Tensor& a);

// Builds [rows x (sum of cols)] by placing the inputs side by side.
Tensor ConcatCols(std::span<const Tensor* const> parts);
Tensor SliceCols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t end);

// Independent engine for (seed, stream), so components seeded from one run
// seed never share a sequence.
Rng StreamRng(std::uint64_t seed, std::uint64_t stream);

Tensor RandomNormal(Shape shape, Rng& rng);
Tensor RandomUniform(Shape shape, double lo, double hi, Rng& rng);

}  // namespace c2f

#endif  // C2F_TENSOR_H_
