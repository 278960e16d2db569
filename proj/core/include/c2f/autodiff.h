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

#ifndef C2F_AUTODIFF_H_
#define C2F_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "c2f/tensor.h"

namespace c2f {

// Handle to a node recorded on a Graph.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

enum class UnaryOp { kTanh, kExp, kLog, kSquare, kNeg };

// Tape for reverse-mode differentiation over rank-2 tensors. Nodes are
// recorded in evaluation order; Backward() walks the tape in reverse.
//
// Parameters are registered by address so that several forward passes over
// the same network in one loss share a single leaf and accumulate gradient.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Constant(Tensor value);
  Var Parameter(const Tensor* source);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const;

  Var Affine(Var x, Var weight, Var bias);
  Var Unary(UnaryOp op, Var x);
  Var Tanh(Var x) { return Unary(UnaryOp::kTanh, x); }
  Var Exp(Var x) { return Unary(UnaryOp::kExp, x); }
  Var Log(Var x) { return Unary(UnaryOp::kLog, x); }
  Var Square(Var x) { return Unary(UnaryOp::kSquare, x); }
  Var Neg(Var x) { return Unary(UnaryOp::kNeg, x); }

  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Scale(Var x, double s);
  Var AddScalar(Var x, double s);
  // Zero gradient wherever the clamp is active.
  Var Clamp(Var x, double lo, double hi);

  Var Sum(Var x);
  Var Mean(Var x);
  Var SliceCols(Var x, std::size_t begin, std::size_t end);
  Var ConcatCols(std::span<const Var> parts);

  // Seeds d(loss)/d(loss) = 1 and propagates to every node. Call once.
  void Backward(Var loss);

  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  // Accumulated gradient of a registered parameter; zeros if unused.
  Tensor GradOf(const Tensor* source) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Graph&, const Tensor&)> backward;
  };

  Var Push(Tensor value, std::function<void(Graph&, const Tensor&)> backward);
  Tensor& grad_mut(Var v);
  void CheckVar(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> parameters_;
  bool backward_done_ = false;
};

}  // namespace c2f

#endif  // C2F_AUTODIFF_H_
