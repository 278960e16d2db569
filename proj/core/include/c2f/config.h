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

#ifndef C2F_CONFIG_H_
#define C2F_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/coarse2fine.h"
#include "c2f/tasks.h"

namespace c2f {

// Parameters of whichever task family is selected. Fields that do not apply
// to the family are ignored.
struct TaskConfig {
  TaskFamily family = TaskFamily::kMixture;
  std::size_t contexts = 4;
  std::size_t modes = 4;  // mixture only
  std::size_t horizon = 4;
  std::size_t action_dim = 2;  // mixture only; arcs are planar
  double stddev = 0.05;
  double radius = 1.0;
  double waypoint_step = 0.25;      // mixture only
  double span = 1.5707963267948966;  // arc only
  double chirality_weight = 0.5;     // arc only

  TaskSpec Build() const;
  bool operator==(const TaskConfig&) const = default;
};

enum class ModelKind { kCoarseToFine, kFlowMatching };
const char* ModelKindName(ModelKind kind);
ModelKind ParseModelKind(const std::string& s);

struct EvalConfig {
  std::size_t samples_per_context = 500;
  double coverage_radius = 1.0;
  // Euler step counts evaluated for flow-matching models.
  std::vector<std::size_t> fm_nfe = {1, 2, 10};
  std::size_t bench_repetitions = 1000;
  std::size_t bench_warmup = 50;
  // Independent seeds for the ablation harness: seed, seed + 1, ...
  std::size_t ablate_seeds = 1;
  // Grids run by the sweep command, any of sigma2, gamma, lambda, loss.
  std::vector<std::string> sweep_grids = {"sigma2", "gamma", "lambda", "loss"};
  std::size_t sweep_workers = 1;

  bool operator==(const EvalConfig&) const = default;
};

struct RunConfig {
  TaskConfig task;
  PhaseSchedule schedule;
  TrainConfig train;
  ModelKind model = ModelKind::kCoarseToFine;
  // Flow-matching updates; 0 means phase1_steps + phase2_steps so both
  // models see the same budget.
  std::size_t fm_steps = 0;
  EvalConfig eval;
  std::string out = "run";

  std::size_t FlowMatchingSteps() const;
  void Validate() const;  // throws ConfigError naming the key
  bool operator==(const RunConfig&) const = default;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, std::size_t line,
              const std::string& message);
  const std::string& key() const { return key_; }
  std::size_t line() const { return line_; }  // 0 when not from a document

 private:
  std::string key_;
  std::size_t line_;
};

// Grammar: one `dotted.key = value` per line, `#` starts a comment, blank
// lines ignored. Lists are comma separated. Missing keys keep defaults.
RunConfig ParseConfig(const std::string& text);
// Applies `key=value` on top of an existing config.
void ApplyOverride(RunConfig& config, const std::string& assignment);
// Every key, in registry order, with full precision.
std::string SerializeConfig(const RunConfig& config);
std::vector<std::string> ConfigKeys();

RunConfig LoadConfigFile(const std::string& path);

}  // namespace c2f

#endif  // C2F_CONFIG_H_
