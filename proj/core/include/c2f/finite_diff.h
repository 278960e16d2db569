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

#ifndef C2F_FINITE_DIFF_H_
#define C2F_FINITE_DIFF_H_

#include <functional>

#include "c2f/tensor.h"

namespace c2f {

using ScalarFunction = std::function<double(const Tensor&)>;

// Central differences with a fixed step h.
Tensor FiniteDiffGrad(const ScalarFunction& f, const Tensor& x, double h);

// Central differences with per-coordinate step scale * (1 + |x_i|).
Tensor FiniteDiffGradRelative(const ScalarFunction& f, const Tensor& x,
                              double scale);

// Richardson extrapolation of two central differences (steps scale and
// scale / 2, both relative). Cancels the h^2 error term, so a larger step
// keeps truncation small while cutting rounding noise.
Tensor FiniteDiffGradRichardson(const ScalarFunction& f, const Tensor& x,
                                double scale);
// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double MaxRelativeError(const Tensor& a, const Tensor& b, double floor);

}  // namespace c2f

#endif  // C2F_FINITE_DIFF_H_
