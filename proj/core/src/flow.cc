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

#include "c2f/flow.h"

#include <cmath>
#include <utility>

namespace c2f {

ActionChunk::ActionChunk(std::size_t horizon, std::size_t action_dim)
    : values_({horizon, action_dim}) {}

ActionChunk::ActionChunk(Tensor values) : values_(std::move(values)) {
  if (values_.rank() != 2) {
    throw ShapeError("action chunk must be [H x d], got " +
                     ShapeString(values_.shape()));
  }
  if (!AllFinite(values_)) throw DomainError("action chunk: non-finite value");
}

Tensor ActionChunk::Flat() const {
  return values_.Reshaped({1, values_.size()});
}

void FlowBatch::Validate() const {
  if (contexts.rows() != actions.rows()) {
    throw ShapeError("flow batch: " + std::to_string(contexts.rows()) +
                     " contexts vs " + std::to_string(actions.rows()) +
                     " actions");
  }
  if (actions.cols() != horizon * action_dim) {
    throw ShapeError("flow batch: action width " +
                     std::to_string(actions.cols()) + " != H*d");
  }
}

Tensor Interpolate(const Tensor& a, const Tensor& eps, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("interpolate: t = " + std::to_string(t) +
                      " outside [0, 1]");
  }
  RequireSameShape(a, eps, "interpolate");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = t * eps[i] + (1.0 - t) * a[i];
  }
  return out;
}

Tensor ConditionalVelocity(const Tensor& a, const Tensor& eps) {
  RequireSameShape(a, eps, "conditional velocity");
  return eps - a;
}

const char* TimeLawName(TimeLaw law) {
  switch (law) {
    case TimeLaw::kUniform:
      return "uniform";
    case TimeLaw::kLogitNormal:
      return "logit_normal";
  }
  return "?";
}

TimeLaw ParseTimeLaw(const std::string& name) {
  if (name == "uniform") return TimeLaw::kUniform;
  if (name == "logit_normal") return TimeLaw::kLogitNormal;
  throw std::invalid_argument("unknown time law '" + name + "'");
}

LossEvaluation EvaluateLoss(const Mlp& net, const LossBuilder& build) {
  Graph graph;
  LossTrace trace = build(graph);
  graph.Backward(trace.total);
  LossEvaluation out;
  out.terms.total = graph.scalar(trace.total);
  out.terms.fine = graph.scalar(trace.fine);
  out.terms.coarse = trace.has_coarse ? graph.scalar(trace.coarse) : 0.0;
  for (const Tensor* p : net.parameters()) out.grads.push_back(graph.GradOf(p));
  return out;
}

LossTerms EvaluateTerms(const LossBuilder& build) {
  Graph graph;
  LossTrace trace = build(graph);
  LossTerms terms;
  terms.total = graph.scalar(trace.total);
  terms.fine = graph.scalar(trace.fine);
  terms.coarse = trace.has_coarse ? graph.scalar(trace.coarse) : 0.0;
  return terms;
}

LossTrace TraceFmLoss(Graph& graph, const Denoiser& net,
                      const FlowBatch& batch, Rng& rng, TimeLaw law) {
  batch.Validate();
  const std::size_t rows = batch.size();
  const std::size_t width = batch.actions.cols();
  Tensor t = Tensor::Matrix(rows, 1);
  if (law == TimeLaw::kUniform) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (double& v : t.values()) v = uniform(rng);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : t.values()) v = 1.0 / (1.0 + std::exp(-normal(rng)));
  }
  Tensor eps = RandomNormal({rows, width}, rng);
  Tensor x(eps.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      x.at(r, c) = t[r] * eps.at(r, c) + (1.0 - t[r]) * batch.actions.at(r, c);
    }
  }
  Tensor target = ConditionalVelocity(batch.actions, eps);
  Var raw = net.Trace(graph, graph.Constant(batch.contexts),
                      graph.Constant(std::move(x)),
                      graph.Constant(std::move(t)));
  Var mode = graph.SliceCols(raw, 0, width);
  Var loss = graph.Mean(
      graph.Square(graph.Sub(mode, graph.Constant(std::move(target)))));
  return LossTrace{loss, loss, Var{}, false};
}

Tensor MeanHead(const Tensor& raw) {
  return SliceCols(raw, 0, raw.cols() / 2);
}

SampleResult EulerSampleFrom(const Denoiser& net, const Tensor& contexts,
                             Tensor x, int steps) {
  if (steps < 1) throw DomainError("euler: steps must be >= 1");
  const double dt = -1.0 / steps;
  SampleResult result;
  for (int k = steps; k >= 1; --k) {
    const double t = static_cast<double>(k) / steps;
    Tensor v = MeanHead(net.Forward(contexts, x, TimeColumn(x.rows(), t)));
    ++result.nfe;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dt * v[i];
  }
  result.actions = std::move(x);
  return result;
}

SampleResult EulerSample(const Denoiser& net, const Tensor& contexts,
                         int steps, Rng& rng) {
  if (steps < 1) throw DomainError("euler: steps must be >= 1");
  Tensor eps = RandomNormal({contexts.rows(), net.dims().chunk_width()}, rng);
  return EulerSampleFrom(net, contexts, std::move(eps), steps);
}

Tensor CountingDenoiser::Forward(const Tensor& contexts, const Tensor& x,
                                 const Tensor& t) const {
  ++forward_calls_;
  return inner_.Forward(contexts, x, t);
}

Var CountingDenoiser::Trace(Graph& graph, Var contexts, Var x, Var t) const {
  ++trace_calls_;
  return inner_.Trace(graph, contexts, x, t);
}

}  // namespace c2f
