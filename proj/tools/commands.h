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

#ifndef C2F_TOOLS_COMMANDS_H_
#define C2F_TOOLS_COMMANDS_H_

#include <cstddef>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "c2f/checkpoint.h"
#include "c2f/coarse2fine.h"
#include "c2f/config.h"
#include "c2f/eval.h"
#include "c2f/mlp.h"

namespace c2f::cli {

// Seed streams derived from train.seed.
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kEvalStream = 2;
inline constexpr std::uint64_t kBenchStream = 3;

// JSON-lines telemetry. Events carry no timestamps so reruns match bitwise.
class EventLog {
 public:
  EventLog() = default;  // discards everything
  explicit EventLog(const std::string& path);

  void Write(const std::string& event,
             const std::vector<std::pair<std::string, std::string>>& strings,
             const std::vector<std::pair<std::string, double>>& numbers = {},
             const std::vector<std::pair<std::string, std::int64_t>>&
                 integers = {});
  void Step(const std::string& model, const StepRecord& record);

 private:
  std::unique_ptr<std::ofstream> out_;
};

struct TrainedModel {
  ModelKind kind;
  Mlp net;
  TrainReport report;
  Rng rng;  // training engine after the last step
};

// Same init stream for both kinds, so FM and CF start from identical
// weights under a shared seed.
TrainedModel TrainModel(const RunConfig& config, ModelKind kind,
                        EventLog& log);
TrainedModel FromCheckpoint(const Checkpoint& checkpoint);

std::string FormatNumber(double v);
std::string TrainReportCsvHeader();
std::string TrainReportCsv(const TrainReport& report);

// Samplers a trained model is judged with: CF@2 (or CF@1 without
// refinement) for coarse-to-fine models, FM@N per eval.fm_nfe otherwise.
std::vector<std::unique_ptr<Sampler>> ModelSamplers(const TrainedModel& model,
                                                    const RunConfig& config);

std::string MetricsCsvHeader();
// One row per context plus an `all` row per sampler.
std::string MetricsCsv(const std::vector<const Sampler*>& samplers,
                       const TaskSpec& task, const RunConfig& config,
                       Rng& rng);

std::vector<FrontierRow> RunBench(const TrainedModel& cf,
                                  const TrainedModel& fm,
                                  const RunConfig& config);

struct AblationRow {
  std::string label;
  std::uint64_t seed = 0;
  int nfe = 0;
  QualityReport quality;
};

inline const char* const kAblationLabels[] = {
    "full", "w/o Phase I", "w/o Phase II", "w/o var. mod.", "w/o refine."};

// Config of one ablation variant. Training ignores `refine`, so
// "w/o refine." trains exactly like "full".
RunConfig AblationVariant(const RunConfig& base, const std::string& label);
std::vector<AblationRow> RunAblation(const RunConfig& config, EventLog& log);
std::string AblationCsvHeader();
std::string AblationCsvRow(const AblationRow& row);

struct SweepCell {
  std::string grid;
  std::size_t index = 0;
  RunConfig config;
};

struct SweepRow {
  SweepCell cell;
  QualityReport quality;
};

std::vector<SweepCell> SweepGrid(const RunConfig& base);
// Runs every cell in its own subdirectory of `out` (skipped when empty),
// on up to eval.sweep_workers threads. Rows come back in grid order.
std::vector<SweepRow> RunSweep(const RunConfig& config, const std::string& out);
std::string SweepCsvHeader();
std::string SweepCsvRow(const SweepRow& row);

// Subcommands. Each writes into config.out and returns 0 on success.
int CmdTrain(const RunConfig& config);
int CmdEval(const RunConfig& config, const std::vector<std::string>& checkpoints);
int CmdBench(const RunConfig& config,
             const std::vector<std::string>& checkpoints);
int CmdAblate(const RunConfig& config);
int CmdSweep(const RunConfig& config);

}  // namespace c2f::cli

#endif  // C2F_TOOLS_COMMANDS_H_
