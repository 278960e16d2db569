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

#ifndef C2F_TASKS_H_
#define C2F_TASKS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "c2f/flow.h"
#include "c2f/tensor.h"

namespace c2f {

enum class TaskFamily { kMixture, kArc };

const char* TaskFamilyName(TaskFamily family);
TaskFamily ParseTaskFamily(const std::string& name);

// One component of a context-conditional action distribution: an H x d mean
// chunk with isotropic Gaussian noise.
struct TaskMode {
  Tensor mean;  // [H x d]
  double stddev = 0.0;
  double weight = 1.0;
};

// Synthetic conditional action distribution. Contexts are one-hot vectors,
// so the context width equals the number of contexts. Every family compiles
// down to an explicit mode list per context, which doubles as the exact
// oracle sampler.
struct TaskSpec {
  TaskFamily family = TaskFamily::kMixture;
  std::size_t horizon = 1;
  std::size_t action_dim = 1;
  std::vector<std::vector<TaskMode>> modes;  // [context][mode]

  std::size_t num_contexts() const { return modes.size(); }
  std::size_t context_dim() const { return modes.size(); }
  std::size_t chunk_width() const { return horizon * action_dim; }

  Tensor Context(std::size_t index) const;  // one-hot [m]
  // Rows [per_context * m x m], one contiguous block per context.
  Tensor ContextGrid(std::size_t per_context) const;
  std::size_t ContextIndex(std::span<const double> context) const;

  void Validate() const;
};

struct MixtureParams {
  std::size_t contexts = 4;
  std::size_t modes = 4;
  std::size_t horizon = 4;
  std::size_t action_dim = 2;
  double stddev = 0.05;
  double radius = 1.0;
  // Angular advance between consecutive waypoints of a mode, in radians.
  double waypoint_step = 0.25;
};

// K equally weighted modes per context. Mode k of context c starts at angle
// 2*pi*(k + c/m)/K on the radius circle and advances by waypoint_step per
// waypoint. Coordinates past the first two are zero.
TaskSpec MakeMixtureTask(const MixtureParams& params);

struct ArcParams {
  std::size_t contexts = 4;
  std::size_t horizon = 4;
  double radius = 1.0;
  double span = 1.5707963267948966;  // pi / 2
  double chirality_weight = 0.5;     // weight of the counter-clockwise mode
  double stddev = 0.0;
};

// Two chirality modes per context with waypoints on the radius circle at
// theta_j = start + s * (j / H) * (end - start), j = 1..H, s = +1 / -1.
// Context c starts at 2*pi*c/m and ends at start + span.
TaskSpec MakeArcTask(const ArcParams& params);
TaskSpec MakeArcTask(const ArcParams& params,
                     std::span<const double> start_angles,
                     std::span<const double> end_angles);

// Contexts uniform over the task's context set, actions from the
// context-conditional mixture.
FlowBatch SampleBatch(const TaskSpec& task, std::size_t batch_size, Rng& rng);

// n draws [n x H*d] from one context.
Tensor OracleSample(const TaskSpec& task, std::size_t context, std::size_t n,
                    Rng& rng);

struct NearestMode {
  std::size_t index = 0;
  double distance = 0.0;
};

// Euclidean distance over the flattened chunk; ties go to the lowest index.
NearestMode FindNearestMode(const TaskSpec& task, std::size_t context,
                            std::span<const double> sample);

}  // namespace c2f

#endif  // C2F_TASKS_H_
