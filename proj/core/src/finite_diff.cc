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

#include "c2f/finite_diff.h"

#include <algorithm>
#include <cmath>

namespace c2f {

namespace {

template <typename StepFn>
Tensor CentralDifference(const ScalarFunction& f, const Tensor& x,
                         StepFn step) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = step(x[i]);
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace

Tensor FiniteDiffGrad(const ScalarFunction& f, const Tensor& x, double h) {
  return CentralDifference(f, x, [h](double) { return h; });
}

Tensor FiniteDiffGradRelative(const ScalarFunction& f, const Tensor& x,
                              double scale) {
  return CentralDifference(
      f, x, [scale](double xi) { return scale * (1.0 + std::abs(xi)); });
}

Tensor FiniteDiffGradRichardson(const ScalarFunction& f, const Tensor& x,
                                double scale) {
  const Tensor coarse = FiniteDiffGradRelative(f, x, scale);
  const Tensor fine = FiniteDiffGradRelative(f, x, 0.5 * scale);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  }
  return out;
}

double MaxRelativeError(const Tensor& a, const Tensor& b, double floor) {
  RequireSameShape(a, b, "relative error");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace c2f
