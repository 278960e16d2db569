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

#ifndef C2F_GAUSSIAN_H_
#define C2F_GAUSSIAN_H_

#include "c2f/autodiff.h"
#include "c2f/tensor.h"

namespace c2f {

inline constexpr double kLogVarMin = -5.0;
inline constexpr double kLogVarMax = 20.0;

// Diagonal Gaussian with log-variance clamped to [kLogVarMin, kLogVarMax].
//
// Reductions (Kl, Nll) sum over every extent after the leading one and
// divide by that count, giving one per-dimension mean per batch row. A
// rank-1 tensor is a single row.
class DiagonalGaussian {
 public:
  DiagonalGaussian(Tensor mean, Tensor logvar);

  // Splits the last extent of `raw` into a mean half and a log-variance half.
  static DiagonalGaussian FromParameters(const Tensor& raw);

  const Tensor& mean() const { return mean_; }
  const Tensor& logvar() const { return logvar_; }
  Tensor variance() const;
  Tensor stddev() const;
  // Inverse of FromParameters (with the clamped log-variance).
  Tensor Parameters() const;

  const Tensor& Mode() const { return mean_; }
  // mean + exp(logvar / 2) * noise
  Tensor Sample(const Tensor& noise) const;
  // KL(this || other), one entry per batch row.
  Tensor Kl(const DiagonalGaussian& other) const;
  // -log N(x; mean, var), one entry per batch row.
  Tensor Nll(const Tensor& x) const;

 private:
  Tensor ReducePerRow(const Tensor& per_dim) const;

  Tensor mean_;
  Tensor logvar_;
};

// Differentiable counterpart used inside loss graphs.
struct GaussianVar {
  Var mean;
  Var logvar;
};

// Splits [B x 2n] network output columns and clamps the log-variance half.
GaussianVar TraceGaussian(Graph& graph, Var raw);
Var TraceSample(Graph& graph, const GaussianVar& g, const Tensor& noise);
// Mean over every element of the per-dimension KL(q || p).
Var TraceKlMean(Graph& graph, const GaussianVar& q, const GaussianVar& p);
// Mean over every element of the per-dimension negative log-likelihood.
Var TraceNllMean(Graph& graph, const GaussianVar& g, Var x);

}  // namespace c2f

#endif  // C2F_GAUSSIAN_H_
