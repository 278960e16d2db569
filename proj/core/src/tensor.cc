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

#include "c2f/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace c2f {

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(ShapeSize(shape_), fill) {
  for (std::size_t e : shape_) {
    if (e == 0) throw ShapeError("tensor extents must be positive: " +
                                 ShapeString(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (ShapeSize(shape_) != values_.size()) {
    throw ShapeError("shape " + ShapeString(shape_) + " holds " +
                     std::to_string(ShapeSize(shape_)) + " values, got " +
                     std::to_string(values_.size()));
  }
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::Vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

std::size_t Tensor::rows() const {
  return shape_.size() >= 2 ? shape_[0] : 1;
}

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 0;
  if (shape_.size() == 1) return shape_[0];
  return values_.size() / shape_[0];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(values_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(values_).subspan(r * c, c);
}

Tensor Tensor::Reshaped(Shape shape) const {
  return Tensor(std::move(shape), values_);
}

void Tensor::Fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void RequireSameShape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

namespace {

template <typename Op>
Tensor Zip(const Tensor& a, const Tensor& b, std::string_view what, Op op) {
  RequireSameShape(a, b, what);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  return Zip(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: incompatible " + ShapeString(a.shape()) +
                     " . " + ShapeString(b.shape()));
  }
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  Tensor out = Tensor::Matrix(n, m);
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* po = out.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

double Sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double Mean(const Tensor& a) {
  return a.empty() ? 0.0 : Sum(a) / static_cast<double>(a.size());
}

double MaxAbs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

bool AllFinite(const Tensor& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor ConcatCols(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rows = parts.front()->rows();
  std::size_t total = 0;
  for (const Tensor* p : parts) {
    if (p->rows() != rows) {
      throw ShapeError("concat: row mismatch " + ShapeString(p->shape()) +
                       " vs " + std::to_string(rows) + " rows");
    }
    total += p->cols();
  }
  Tensor out = Tensor::Matrix(rows, total);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
      auto src = p->row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + offset);
      offset += src.size();
    }
  }
  return out;
}

Tensor SliceCols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.cols()) {
    throw ShapeError("slice: columns [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of " +
                     ShapeString(a.shape()));
  }
  Tensor out = Tensor::Matrix(a.rows(), end - begin);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto src = a.row(r);
    std::copy(src.begin() + begin, src.begin() + end, out.row(r).begin());
  }
  return out;
}

Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.rows()) {
    throw ShapeError("slice: rows out of range for " + ShapeString(a.shape()));
  }
  const std::size_t c = a.cols();
  std::vector<double> v(a.values().begin() + begin * c,
                        a.values().begin() + end * c);
  return Tensor({end - begin, c}, std::move(v));
}

Rng StreamRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

Tensor RandomNormal(Shape shape, Rng& rng) {
  Tensor out(std::move(shape));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.values()) v = normal(rng);
  return out;
}

Tensor RandomUniform(Shape shape, double lo, double hi, Rng& rng) {
  Tensor out(std::move(shape));
  std::uniform_real_distribution<double> uniform(lo, hi);
  for (double& v : out.values()) v = uniform(rng);
  return out;
}

}  // namespace c2f
