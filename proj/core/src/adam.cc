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

#include "c2f/adam.h"

#include <cmath>
#include <string>

namespace c2f {

AdamState::AdamState(std::span<const Tensor* const> params,
                     AdamOptions options)
    : options_(options) {
  for (const Tensor* p : params) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

void AdamStep(std::span<Tensor* const> params, std::span<const Tensor> grads,
              AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) +
                     " params, " + std::to_string(grads.size()) +
                     " grads, " + std::to_string(state.m_.size()) +
                     " accumulators");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    RequireSameShape(*params[i], grads[i], "adam");
    RequireSameShape(*params[i], state.m_[i], "adam");
  }
  const AdamOptions& o = state.options_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m_[i];
    Tensor& v = state.v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace c2f
