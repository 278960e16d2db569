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

#include "c2f/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace c2f {

void Graph::CheckVar(Var v) const {
  if (v.id >= nodes_.size()) {
    throw std::invalid_argument("autodiff: variable does not belong to graph");
  }
}

Var Graph::Push(Tensor value,
                std::function<void(Graph&, const Tensor&)> backward) {
  nodes_.push_back(Node{std::move(value), Tensor(), std::move(backward)});
  return Var{nodes_.size() - 1};
}

Tensor& Graph::grad_mut(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

double Graph::scalar(Var v) const {
  CheckVar(v);
  const Tensor& t = nodes_[v.id].value;
  if (t.size() != 1) {
    throw ShapeError("autodiff: expected scalar, got " +
                     ShapeString(t.shape()));
  }
  return t[0];
}

Var Graph::Constant(Tensor value) { return Push(std::move(value), nullptr); }

Var Graph::Parameter(const Tensor* source) {
  auto it = parameters_.find(source);
  if (it != parameters_.end()) return Var{it->second};
  Var v = Push(*source, nullptr);
  parameters_.emplace(source, v.id);
  return v;
}

Tensor Graph::GradOf(const Tensor* source) const {
  auto it = parameters_.find(source);
  if (it == parameters_.end() || nodes_[it->second].grad.empty()) {
    return Tensor(source->shape());
  }
  return nodes_[it->second].grad;
}

Var Graph::Affine(Var x, Var weight, Var bias) {
  CheckVar(x);
  CheckVar(weight);
  CheckVar(bias);
  const Tensor& xv = value(x);
  const Tensor& wv = value(weight);
  const Tensor& bv = value(bias);
  if (xv.rank() != 2 || wv.rank() != 2 || xv.shape()[1] != wv.shape()[0] ||
      bv.size() != wv.shape()[1]) {
    throw ShapeError("affine: " + ShapeString(xv.shape()) + " . " +
                     ShapeString(wv.shape()) + " + " +
                     ShapeString(bv.shape()));
  }
  Tensor out = MatMul(xv, wv);
  const std::size_t cols = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bv[c];
  }
  return Push(std::move(out), [x, weight, bias](Graph& g, const Tensor& dy) {
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(weight);
    const std::size_t n = xv.shape()[0], k = xv.shape()[1],
                      m = wv.shape()[1];
    Tensor& dx = g.grad_mut(x);
    Tensor& dw = g.grad_mut(weight);
    Tensor& db = g.grad_mut(bias);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        double acc = 0.0;
        const double xip = xv[i * k + p];
        for (std::size_t j = 0; j < m; ++j) {
          const double d = dy[i * m + j];
          acc += d * wv[p * m + j];
          dw[p * m + j] += xip * d;
        }
        dx[i * k + p] += acc;
      }
      for (std::size_t j = 0; j < m; ++j) db[j] += dy[i * m + j];
    }
  });
}

Var Graph::Unary(UnaryOp op, Var x) {
  CheckVar(x);
  Tensor out = value(x);
  switch (op) {
    case UnaryOp::kTanh:
      for (double& v : out.values()) v = std::tanh(v);
      return Push(std::move(out), [x](Graph& g, const Tensor& dy) {
        Tensor& dx = g.grad_mut(x);
        const Tensor& xv = g.value(x);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          const double t = std::tanh(xv[i]);
          dx[i] += dy[i] * (1.0 - t * t);
        }
      });
    case UnaryOp::kExp:
      for (double& v : out.values()) v = std::exp(v);
      return Push(std::move(out), [x](Graph& g, const Tensor& dy) {
        Tensor& dx = g.grad_mut(x);
        const Tensor& xv = g.value(x);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx[i] += dy[i] * std::exp(xv[i]);
        }
      });
    case UnaryOp::kLog:
      for (double& v : out.values()) {
        if (!(v > 0.0)) throw DomainError("log: non-positive argument");
        v = std::log(v);
      }
      return Push(std::move(out), [x](Graph& g, const Tensor& dy) {
        Tensor& dx = g.grad_mut(x);
        const Tensor& xv = g.value(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] / xv[i];
      });
    case UnaryOp::kSquare:
      for (double& v : out.values()) v = v * v;
      return Push(std::move(out), [x](Graph& g, const Tensor& dy) {
        Tensor& dx = g.grad_mut(x);
        const Tensor& xv = g.value(x);
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx[i] += 2.0 * xv[i] * dy[i];
        }
      });
    case UnaryOp::kNeg:
      for (double& v : out.values()) v = -v;
      return Push(std::move(out), [x](Graph& g, const Tensor& dy) {
        Tensor& dx = g.grad_mut(x);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] -= dy[i];
      });
  }
  throw std::invalid_argument("autodiff: unsupported primitive " +
                              std::to_string(static_cast<int>(op)));
}

Var Graph::Add(Var a, Var b) {
  CheckVar(a);
  CheckVar(b);
  Tensor out = value(a) + value(b);
  return Push(std::move(out), [a, b](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_mut(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
    Tensor& db = g.grad_mut(b);
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i];
  });
}

Var Graph::Sub(Var a, Var b) {
  CheckVar(a);
  CheckVar(b);
  Tensor out = value(a) - value(b);
  return Push(std::move(out), [a, b](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_mut(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
    Tensor& db = g.grad_mut(b);
    for (std::size_t i = 0; i < db.size(); ++i) db[i] -= dy[i];
  });
}

Var Graph::Mul(Var a, Var b) {
  CheckVar(a);
  CheckVar(b);
  Tensor out = value(a) * value(b);
  return Push(std::move(out), [a, b](Graph& g, const Tensor& dy) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    Tensor& da = g.grad_mut(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv[i];
    Tensor& db = g.grad_mut(b);
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av[i];
  });
}

Var Graph::Scale(Var x, double s) {
  CheckVar(x);
  Tensor out = s * value(x);
  return Push(std::move(out), [x, s](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_mut(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += s * dy[i];
  });
}

Var Graph::AddScalar(Var x, double s) {
  CheckVar(x);
  Tensor out = value(x);
  for (double& v : out.values()) v += s;
  return Push(std::move(out), [x](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_mut(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  });
}

Var Graph::Clamp(Var x, double lo, double hi) {
  CheckVar(x);
  Tensor out = value(x);
  for (double& v : out.values()) v = std::clamp(v, lo, hi);
  return Push(std::move(out), [x, lo, hi](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_mut(x);
    const Tensor& xv = g.value(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xv[i] >= lo && xv[i] <= hi) dx[i] += dy[i];
    }
  });
}

Var Graph::Sum(Var x) {
  CheckVar(x);
  Tensor out({1}, c2f::Sum(value(x)));
  return Push(std::move(out), [x](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_mut(x);
    for (double& v : dx.values()) v += dy[0];
  });
}

Var Graph::Mean(Var x) {
  CheckVar(x);
  const double n = static_cast<double>(value(x).size());
  Tensor out({1}, c2f::Sum(value(x)) / n);
  return Push(std::move(out), [x, n](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_mut(x);
    for (double& v : dx.values()) v += dy[0] / n;
  });
}

Var Graph::SliceCols(Var x, std::size_t begin, std::size_t end) {
  CheckVar(x);
  Tensor out = c2f::SliceCols(value(x), begin, end);
  return Push(std::move(out), [x, begin, end](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_mut(x);
    const std::size_t width = end - begin;
    for (std::size_t r = 0; r < dx.rows(); ++r) {
      auto drow = dx.row(r);
      for (std::size_t c = 0; c < width; ++c) {
        drow[begin + c] += dy[r * width + c];
      }
    }
  });
}

Var Graph::ConcatCols(std::span<const Var> parts) {
  std::vector<const Tensor*> values;
  values.reserve(parts.size());
  for (Var p : parts) {
    CheckVar(p);
    values.push_back(&value(p));
  }
  Tensor out = c2f::ConcatCols(values);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return Push(std::move(out), [inputs](Graph& g, const Tensor& dy) {
    const std::size_t total = dy.cols();
    std::size_t offset = 0;
    for (Var p : inputs) {
      Tensor& dp = g.grad_mut(p);
      const std::size_t width = dp.cols();
      for (std::size_t r = 0; r < dp.rows(); ++r) {
        auto drow = dp.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          drow[c] += dy[r * total + offset + c];
        }
      }
      offset += width;
    }
  });
}

void Graph::Backward(Var loss) {
  CheckVar(loss);
  if (backward_done_) {
    throw std::logic_error("autodiff: Backward() called twice on one graph");
  }
  if (value(loss).size() != 1) {
    throw ShapeError("autodiff: loss must be scalar, got " +
                     ShapeString(value(loss).shape()));
  }
  backward_done_ = true;
  grad_mut(loss)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

}  // namespace c2f
