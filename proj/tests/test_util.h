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

#ifndef C2F_TESTS_TEST_UTIL_H_
#define C2F_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "c2f/finite_diff.h"
#include "c2f/flow.h"
#include "c2f/mlp.h"
#include "c2f/tasks.h"

namespace c2f {

// Readable gtest failure output.
inline void PrintTo(const Tensor& t, std::ostream* os) {
  *os << ShapeString(t.shape()) << " {";
  for (std::size_t i = 0; i < t.size() && i < 16; ++i) {
    *os << (i ? ", " : "") << t[i];
  }
  *os << (t.size() > 16 ? ", ...}" : "}");
}

}  // namespace c2f

namespace c2f::testing {

// Loss builder that draws all its randomness from the supplied engine. The
// gradient check hands it a fresh copy per evaluation, freezing the noise.
using RandomLoss = std::function<LossTrace(Graph&, Rng&)>;

// Relative-error floor for gradient checks: components below it are
// compared in absolute terms, since the finite-difference reference carries
// a small absolute rounding error of its own.
inline constexpr double kGradFloor = 1e-4;

// Largest relative error between backprop and central differences over
// every parameter of `net`.
inline double MaxGradientError(Mlp& net, const RandomLoss& loss,
                               std::uint64_t noise_seed) {
  auto build = [&](Graph& g) {
    Rng rng(noise_seed);
    return loss(g, rng);
  };
  const LossEvaluation eval = EvaluateLoss(net, build);
  const std::vector<Tensor*> params = net.parameters();
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor* param = params[p];
    const Tensor saved = *param;
    auto f = [&](const Tensor& x) {
      *param = x;
      return EvaluateTerms(build).total;
    };
    const Tensor fd = FiniteDiffGradRichardson(f, saved, 1e-3);
    *param = saved;
    worst = std::max(worst, MaxRelativeError(eval.grads[p], fd, kGradFloor));
  }
  return worst;
}

inline ModelDims DimsOf(const TaskSpec& task) {
  return ModelDims{task.context_dim(), task.horizon, task.action_dim};
}

}  // namespace c2f::testing

#endif  // C2F_TESTS_TEST_UTIL_H_
