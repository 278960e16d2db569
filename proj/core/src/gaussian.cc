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

#include "c2f/gaussian.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace c2f {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

}  // namespace

DiagonalGaussian::DiagonalGaussian(Tensor mean, Tensor logvar)
    : mean_(std::move(mean)), logvar_(std::move(logvar)) {
  RequireSameShape(mean_, logvar_, "gaussian");
  for (double& v : logvar_.values()) v = std::clamp(v, kLogVarMin, kLogVarMax);
}

DiagonalGaussian DiagonalGaussian::FromParameters(const Tensor& raw) {
  if (raw.rank() == 0 || raw.shape().back() % 2 != 0) {
    throw ShapeError("gaussian: last extent of " + ShapeString(raw.shape()) +
                     " must be even");
  }
  const std::size_t last = raw.shape().back();
  const std::size_t half = last / 2;
  Shape shape = raw.shape();
  shape.back() = half;
  Tensor mean(shape), logvar(shape);
  const std::size_t groups = raw.size() / last;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < half; ++i) {
      mean[g * half + i] = raw[g * last + i];
      logvar[g * half + i] = raw[g * last + half + i];
    }
  }
  return DiagonalGaussian(std::move(mean), std::move(logvar));
}

Tensor DiagonalGaussian::variance() const {
  Tensor out = logvar_;
  for (double& v : out.values()) v = std::exp(v);
  return out;
}

Tensor DiagonalGaussian::stddev() const {
  Tensor out = logvar_;
  for (double& v : out.values()) v = std::exp(0.5 * v);
  return out;
}

Tensor DiagonalGaussian::Parameters() const {
  const std::size_t half = mean_.shape().back();
  Shape shape = mean_.shape();
  shape.back() = 2 * half;
  Tensor raw(shape);
  const std::size_t groups = mean_.size() / half;
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < half; ++i) {
      raw[g * 2 * half + i] = mean_[g * half + i];
      raw[g * 2 * half + half + i] = logvar_[g * half + i];
    }
  }
  return raw;
}

Tensor DiagonalGaussian::Sample(const Tensor& noise) const {
  RequireSameShape(mean_, noise, "gaussian sample");
  Tensor out = mean_;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += std::exp(0.5 * logvar_[i]) * noise[i];
  }
  return out;
}

Tensor DiagonalGaussian::ReducePerRow(const Tensor& per_dim) const {
  const std::size_t rows = per_dim.rank() >= 2 ? per_dim.shape()[0] : 1;
  const std::size_t width = per_dim.size() / rows;
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < width; ++i) s += per_dim[r * width + i];
    out[r] = s / static_cast<double>(width);
  }
  return out;
}

Tensor DiagonalGaussian::Kl(const DiagonalGaussian& other) const {
  RequireSameShape(mean_, other.mean_, "gaussian kl");
  Tensor per_dim(mean_.shape());
  for (std::size_t i = 0; i < per_dim.size(); ++i) {
    const double lq = logvar_[i], lp = other.logvar_[i];
    const double diff = other.mean_[i] - mean_[i];
    per_dim[i] = 0.5 * (std::exp(lq - lp) + diff * diff * std::exp(-lp) -
                        1.0 + lp - lq);
  }
  return ReducePerRow(per_dim);
}

Tensor DiagonalGaussian::Nll(const Tensor& x) const {
  RequireSameShape(mean_, x, "gaussian nll");
  Tensor per_dim(mean_.shape());
  for (std::size_t i = 0; i < per_dim.size(); ++i) {
    const double diff = x[i] - mean_[i];
    per_dim[i] =
        0.5 * (kLog2Pi + logvar_[i] + diff * diff * std::exp(-logvar_[i]));
  }
  return ReducePerRow(per_dim);
}

GaussianVar TraceGaussian(Graph& graph, Var raw) {
  const std::size_t width = graph.value(raw).cols();
  if (width % 2 != 0) {
    throw ShapeError("gaussian: odd parameter width " + std::to_string(width));
  }
  const std::size_t half = width / 2;
  Var mean = graph.SliceCols(raw, 0, half);
  Var logvar =
      graph.Clamp(graph.SliceCols(raw, half, width), kLogVarMin, kLogVarMax);
  return GaussianVar{mean, logvar};
}

Var TraceSample(Graph& graph, const GaussianVar& g, const Tensor& noise) {
  RequireSameShape(graph.value(g.mean), noise, "gaussian sample");
  Var std = graph.Exp(graph.Scale(g.logvar, 0.5));
  return graph.Add(g.mean, graph.Mul(std, graph.Constant(noise)));
}

Var TraceKlMean(Graph& graph, const GaussianVar& q, const GaussianVar& p) {
  RequireSameShape(graph.value(q.mean), graph.value(p.mean), "gaussian kl");
  Var log_ratio = graph.Sub(q.logvar, p.logvar);  // lq - lp
  Var diff = graph.Sub(p.mean, q.mean);
  Var mahalanobis =
      graph.Mul(graph.Square(diff), graph.Exp(graph.Neg(p.logvar)));
  Var per_dim = graph.Sub(graph.Add(graph.Exp(log_ratio), mahalanobis),
                          graph.AddScalar(log_ratio, 1.0));
  return graph.Scale(graph.Mean(per_dim), 0.5);
}

Var TraceNllMean(Graph& graph, const GaussianVar& g, Var x) {
  RequireSameShape(graph.value(g.mean), graph.value(x), "gaussian nll");
  Var diff = graph.Sub(x, g.mean);
  Var scaled = graph.Mul(graph.Square(diff), graph.Exp(graph.Neg(g.logvar)));
  Var per_dim = graph.AddScalar(graph.Add(g.logvar, scaled), kLog2Pi);
  return graph.Scale(graph.Mean(per_dim), 0.5);
}

}  // namespace c2f
