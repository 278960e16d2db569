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

#ifndef C2F_ADAM_H_
#define C2F_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "c2f/tensor.h"

namespace c2f {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators for one parameter list.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::span<const Tensor* const> params, AdamOptions options);

  const AdamOptions& options() const { return options_; }
  std::int64_t step() const { return step_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }

 private:
  friend void AdamStep(std::span<Tensor* const> params,
                       std::span<const Tensor> grads, AdamState& state);

  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// Bias-corrected Adam update, in place.
void AdamStep(std::span<Tensor* const> params, std::span<const Tensor> grads,
              AdamState& state);

}  // namespace c2f

#endif  // C2F_ADAM_H_
