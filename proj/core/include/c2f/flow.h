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

#ifndef C2F_FLOW_H_
#define C2F_FLOW_H_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "c2f/autodiff.h"
#include "c2f/mlp.h"
#include "c2f/tensor.h"

namespace c2f {

// One H x d action chunk.
class ActionChunk {
 public:
  ActionChunk(std::size_t horizon, std::size_t action_dim);
  explicit ActionChunk(Tensor values);  // must be rank 2 [H x d]

  std::size_t horizon() const { return values_.shape()[0]; }
  std::size_t action_dim() const { return values_.shape()[1]; }
  const Tensor& values() const { return values_; }
  Tensor& values() { return values_; }
  // Row vector [1 x H*d].
  Tensor Flat() const;

  bool operator==(const ActionChunk&) const = default;

 private:
  Tensor values_;
};

// Contexts [B x m] paired with flattened actions [B x H*d].
struct FlowBatch {
  Tensor contexts;
  Tensor actions;
  std::size_t horizon = 1;
  std::size_t action_dim = 1;

  std::size_t size() const { return actions.rows(); }
  void Validate() const;
};

// x_t = t * eps + (1 - t) * a
Tensor Interpolate(const Tensor& a, const Tensor& eps, double t);
// u = eps - a; independent of t.
Tensor ConditionalVelocity(const Tensor& a, const Tensor& eps);

enum class TimeLaw { kUniform, kLogitNormal };

const char* TimeLawName(TimeLaw law);
TimeLaw ParseTimeLaw(const std::string& name);

// Scalar loss terms reported by every training objective.
struct LossTerms {
  double fine = 0.0;
  double coarse = 0.0;
  double total = 0.0;
};

// Graph handles for a traced objective. `coarse` is unset for objectives
// without a coarse term.
struct LossTrace {
  Var total;
  Var fine;
  Var coarse;
  bool has_coarse = false;
};

struct LossEvaluation {
  LossTerms terms;
  std::vector<Tensor> grads;  // aligned with Mlp::parameters()
};

using LossBuilder = std::function<LossTrace(Graph&)>;

// Builds a fresh graph, backpropagates, and reads off parameter gradients.
LossEvaluation EvaluateLoss(const Mlp& net, const LossBuilder& build);
// Forward only; for losses evaluated on any Denoiser.
LossTerms EvaluateTerms(const LossBuilder& build);

// Standard flow matching: t per row from `law`, eps ~ N(0, I), regress the
// mean head onto eps - a at x_t. The log-variance head is untouched.
LossTrace TraceFmLoss(Graph& graph, const Denoiser& net,
                      const FlowBatch& batch, Rng& rng,
                      TimeLaw law = TimeLaw::kUniform);

struct SampleResult {
  Tensor actions;  // [B x H*d]
  int nfe = 0;
  std::vector<double> stage_ms;
};

// Uniform-grid Euler integration from t = 1 to t = 0 with `steps` mean-head
// evaluations.
SampleResult EulerSample(const Denoiser& net, const Tensor& contexts,
                         int steps, Rng& rng);
// As above from a caller-supplied starting state.
SampleResult EulerSampleFrom(const Denoiser& net, const Tensor& contexts,
                             Tensor x, int steps);

// Mean half of raw network output.
Tensor MeanHead(const Tensor& raw);

// Forwards to another Denoiser and counts evaluations.
class CountingDenoiser : public Denoiser {
 public:
  explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}

  ModelDims dims() const override { return inner_.dims(); }
  Tensor Forward(const Tensor& contexts, const Tensor& x,
                 const Tensor& t) const override;
  Var Trace(Graph& graph, Var contexts, Var x, Var t) const override;

  int forward_calls() const { return forward_calls_; }
  int trace_calls() const { return trace_calls_; }
  void Reset() { forward_calls_ = trace_calls_ = 0; }

 private:
  const Denoiser& inner_;
  mutable int forward_calls_ = 0;
  mutable int trace_calls_ = 0;
};

}  // namespace c2f

#endif  // C2F_FLOW_H_
