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

#include "c2f/tasks.h"

#include <cmath>
#include <numbers>
#include <random>
#include <utility>

namespace c2f {

const char* TaskFamilyName(TaskFamily family) {
  switch (family) {
    case TaskFamily::kMixture:
      return "mixture";
    case TaskFamily::kArc:
      return "arc";
  }
  return "?";
}

TaskFamily ParseTaskFamily(const std::string& name) {
  if (name == "mixture") return TaskFamily::kMixture;
  if (name == "arc") return TaskFamily::kArc;
  throw std::invalid_argument("unknown task family '" + name + "'");
}

Tensor TaskSpec::Context(std::size_t index) const {
  if (index >= num_contexts()) {
    throw std::out_of_range("task: context " + std::to_string(index) +
                            " out of " + std::to_string(num_contexts()));
  }
  Tensor c({context_dim()});
  c[index] = 1.0;
  return c;
}

Tensor TaskSpec::ContextGrid(std::size_t per_context) const {
  Tensor grid = Tensor::Matrix(per_context * num_contexts(), context_dim());
  for (std::size_t c = 0; c < num_contexts(); ++c) {
    for (std::size_t i = 0; i < per_context; ++i) {
      grid.at(c * per_context + i, c) = 1.0;
    }
  }
  return grid;
}

std::size_t TaskSpec::ContextIndex(std::span<const double> context) const {
  if (context.size() != context_dim()) {
    throw ShapeError("task: context width " + std::to_string(context.size()) +
                     ", expected " + std::to_string(context_dim()));
  }
  for (std::size_t c = 0; c < num_contexts(); ++c) {
    bool match = true;
    for (std::size_t i = 0; i < context.size() && match; ++i) {
      match = context[i] == (i == c ? 1.0 : 0.0);
    }
    if (match) return c;
  }
  throw std::out_of_range("task: unknown context");
}

void TaskSpec::Validate() const {
  if (modes.empty()) throw std::invalid_argument("task: no contexts");
  for (std::size_t c = 0; c < modes.size(); ++c) {
    if (modes[c].empty()) {
      throw std::invalid_argument("task: context " + std::to_string(c) +
                                  " has no modes");
    }
    double total = 0.0;
    for (const TaskMode& m : modes[c]) {
      if (m.mean.shape() != Shape{horizon, action_dim}) {
        throw ShapeError("task: mode mean " + ShapeString(m.mean.shape()) +
                         " is not [H x d]");
      }
      if (m.stddev < 0.0 || m.weight < 0.0) {
        throw std::invalid_argument("task: negative stddev or weight");
      }
      total += m.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("task: weights of context " +
                                  std::to_string(c) + " sum to " +
                                  std::to_string(total));
    }
  }
}

TaskSpec MakeMixtureTask(const MixtureParams& p) {
  TaskSpec task;
  task.family = TaskFamily::kMixture;
  task.horizon = p.horizon;
  task.action_dim = p.action_dim;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < p.contexts; ++c) {
    std::vector<TaskMode> modes;
    for (std::size_t k = 0; k < p.modes; ++k) {
      const double phase =
          two_pi * (static_cast<double>(k) +
                    static_cast<double>(c) / static_cast<double>(p.contexts)) /
          static_cast<double>(p.modes);
      Tensor mean({p.horizon, p.action_dim});
      for (std::size_t j = 0; j < p.horizon; ++j) {
        const double angle = phase + static_cast<double>(j) * p.waypoint_step;
        mean.at(j, 0) = p.radius * std::cos(angle);
        if (p.action_dim > 1) mean.at(j, 1) = p.radius * std::sin(angle);
      }
      modes.push_back(TaskMode{std::move(mean), p.stddev,
                               1.0 / static_cast<double>(p.modes)});
    }
    task.modes.push_back(std::move(modes));
  }
  task.Validate();
  return task;
}

TaskSpec MakeArcTask(const ArcParams& params,
                     std::span<const double> start_angles,
                     std::span<const double> end_angles) {
  if (start_angles.size() != end_angles.size() || start_angles.empty()) {
    throw std::invalid_argument("arc task: need one start/end per context");
  }
  TaskSpec task;
  task.family = TaskFamily::kArc;
  task.horizon = params.horizon;
  task.action_dim = 2;
  const double h = static_cast<double>(params.horizon);
  for (std::size_t c = 0; c < start_angles.size(); ++c) {
    const double delta = end_angles[c] - start_angles[c];
    std::vector<TaskMode> modes;
    for (double chirality : {1.0, -1.0}) {
      Tensor mean({params.horizon, 2});
      for (std::size_t j = 1; j <= params.horizon; ++j) {
        const double theta = start_angles[c] +
                             chirality * (static_cast<double>(j) / h) * delta;
        mean.at(j - 1, 0) = params.radius * std::cos(theta);
        mean.at(j - 1, 1) = params.radius * std::sin(theta);
      }
      const double weight = chirality > 0 ? params.chirality_weight
                                          : 1.0 - params.chirality_weight;
      modes.push_back(TaskMode{std::move(mean), params.stddev, weight});
    }
    task.modes.push_back(std::move(modes));
  }
  task.Validate();
  return task;
}

TaskSpec MakeArcTask(const ArcParams& params) {
  std::vector<double> starts, ends;
  for (std::size_t c = 0; c < params.contexts; ++c) {
    starts.push_back(2.0 * std::numbers::pi * static_cast<double>(c) /
                     static_cast<double>(params.contexts));
    ends.push_back(starts.back() + params.span);
  }
  return MakeArcTask(params, starts, ends);
}

namespace {

std::size_t DrawMode(const std::vector<TaskMode>& modes, Rng& rng) {
  if (modes.size() == 1) return 0;
  std::vector<double> weights;
  for (const TaskMode& m : modes) weights.push_back(m.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return pick(rng);
}

void DrawAction(const TaskMode& mode, std::span<double> out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mode.mean[i];
    if (mode.stddev > 0.0) out[i] += mode.stddev * normal(rng);
  }
}

}  // namespace

FlowBatch SampleBatch(const TaskSpec& task, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  FlowBatch batch;
  batch.horizon = task.horizon;
  batch.action_dim = task.action_dim;
  batch.contexts = Tensor::Matrix(batch_size, task.context_dim());
  batch.actions = Tensor::Matrix(batch_size, task.chunk_width());
  std::uniform_int_distribution<std::size_t> pick_context(
      0, task.num_contexts() - 1);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t c = pick_context(rng);
    batch.contexts.at(b, c) = 1.0;
    const auto& modes = task.modes[c];
    DrawAction(modes[DrawMode(modes, rng)], batch.actions.row(b), rng);
  }
  return batch;
}

Tensor OracleSample(const TaskSpec& task, std::size_t context, std::size_t n,
                    Rng& rng) {
  if (context >= task.num_contexts()) {
    throw std::out_of_range("oracle sample: unknown context");
  }
  Tensor out = Tensor::Matrix(n, task.chunk_width());
  const auto& modes = task.modes[context];
  for (std::size_t i = 0; i < n; ++i) {
    DrawAction(modes[DrawMode(modes, rng)], out.row(i), rng);
  }
  return out;
}

NearestMode FindNearestMode(const TaskSpec& task, std::size_t context,
                            std::span<const double> sample) {
  if (context >= task.num_contexts()) {
    throw std::out_of_range("nearest mode: unknown context");
  }
  if (sample.size() != task.chunk_width()) {
    throw ShapeError("nearest mode: sample width " +
                     std::to_string(sample.size()));
  }
  NearestMode best{0, INFINITY};
  const auto& modes = task.modes[context];
  for (std::size_t k = 0; k < modes.size(); ++k) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      const double diff = sample[i] - modes[k].mean[i];
      d2 += diff * diff;
    }
    const double d = std::sqrt(d2);
    if (d < best.distance) best = NearestMode{k, d};
  }
  return best;
}

}  // namespace c2f
