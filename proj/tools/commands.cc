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

#include "commands.h"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>
#include <utility>

#include "json.hpp"

namespace c2f::cli {

namespace fs = std::filesystem;

EventLog::EventLog(const std::string& path)
    : out_(std::make_unique<std::ofstream>(path)) {
  if (!*out_) throw std::runtime_error("cannot write " + path);
}

void EventLog::Write(
    const std::string& event,
    const std::vector<std::pair<std::string, std::string>>& strings,
    const std::vector<std::pair<std::string, double>>& numbers,
    const std::vector<std::pair<std::string, std::int64_t>>& integers) {
  if (!out_) return;
  nlohmann::ordered_json j;
  j["event"] = event;
  for (const auto& [k, v] : strings) j[k] = v;
  for (const auto& [k, v] : integers) j[k] = v;
  for (const auto& [k, v] : numbers) j[k] = v;
  *out_ << j.dump() << '\n';
}

void EventLog::Step(const std::string& model, const StepRecord& r) {
  Write("step", {{"model", model}},
        {{"fine", r.terms.fine},
         {"coarse", r.terms.coarse},
         {"total", r.terms.total}},
        {{"phase", r.phase}, {"step", static_cast<std::int64_t>(r.step)}});
}

TrainedModel TrainModel(const RunConfig& config, ModelKind kind,
                        EventLog& log) {
  const TaskSpec task = config.task.Build();
  const ModelDims dims{task.context_dim(), task.horizon, task.action_dim};
  Rng init = StreamRng(config.train.seed, kInitStream);
  TrainedModel model{kind, Mlp(dims, config.train.hidden, init), {},
                     StreamRng(config.train.seed, kTrainStream)};
  if (kind == ModelKind::kCoarseToFine) {
    model.report = TrainCoarseToFine(model.net, task, config.schedule,
                                     config.train, model.rng);
  } else {
    model.report = TrainFlowMatching(model.net, task,
                                     config.FlowMatchingSteps(), config.train,
                                     model.rng);
  }
  const std::string name = ModelKindName(kind);
  for (const StepRecord& r : model.report.steps) log.Step(name, r);
  if (!model.report.steps.empty()) {
    const LossTerms& last = model.report.steps.back().terms;
    log.Write("trained", {{"model", name}},
              {{"final_total", last.total}},
              {{"steps", static_cast<std::int64_t>(model.report.steps.size())}});
  }
  return model;
}

TrainedModel FromCheckpoint(const Checkpoint& checkpoint) {
  return TrainedModel{checkpoint.config.model, RestoreMlp(checkpoint), {},
                      RestoreRng(checkpoint)};
}

std::string FormatNumber(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string TrainReportCsvHeader() { return "phase,step,fine,coarse,total"; }

std::string TrainReportCsv(const TrainReport& report) {
  std::string out = TrainReportCsvHeader() + "\n";
  for (const StepRecord& r : report.steps) {
    out += std::to_string(r.phase) + "," + std::to_string(r.step) + "," +
           FormatNumber(r.terms.fine) + "," + FormatNumber(r.terms.coarse) +
           "," + FormatNumber(r.terms.total) + "\n";
  }
  return out;
}

std::vector<std::unique_ptr<Sampler>> ModelSamplers(const TrainedModel& model,
                                                    const RunConfig& config) {
  std::vector<std::unique_ptr<Sampler>> out;
  if (model.kind == ModelKind::kCoarseToFine) {
    const std::string label = config.schedule.refine ? "CF@2" : "CF@1";
    out.push_back(
        std::make_unique<TwoStepSampler>(model.net, config.schedule, label));
  } else {
    for (std::size_t n : config.eval.fm_nfe) {
      out.push_back(std::make_unique<EulerSampler>(
          model.net, static_cast<int>(n), "FM@" + std::to_string(n)));
    }
  }
  return out;
}

namespace {

QualityOptions MakeQualityOptions(const RunConfig& config) {
  return QualityOptions{config.eval.samples_per_context,
                        config.eval.coverage_radius};
}

double MinCoverage(const ModeCoverage& c) {
  double m = 1.0;
  for (double f : c.fractions) m = std::min(m, f);
  return m;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path PrepareOut(const RunConfig& config) {
  const fs::path out(config.out);
  fs::create_directories(out);
  WriteFile(out / "config.txt", SerializeConfig(config));
  return out;
}

// Eval stream seeded per (seed, label) so adding a sampler never shifts the
// draws of another.
Rng SamplerRng(std::uint64_t seed, const std::string& label,
               std::uint64_t stream) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) h = (h ^ c) * 1099511628211ULL;
  return StreamRng(seed ^ h, stream);
}

}  // namespace

std::string MetricsCsvHeader() {
  return "label,nfe,context,energy_distance,mmd,bandwidth,collapsed,"
         "min_coverage";
}

std::string MetricsCsv(const std::vector<const Sampler*>& samplers,
                       const TaskSpec& task, const RunConfig& config,
                       Rng& rng) {
  std::string out = MetricsCsvHeader() + "\n";
  for (const Sampler* s : samplers) {
    const QualityReport q =
        EvaluateQuality(*s, task, MakeQualityOptions(config), rng);
    const std::string prefix = s->label() + "," + std::to_string(s->nfe());
    double min_cov = 1.0;
    for (const ContextQuality& c : q.contexts) {
      const double mc = MinCoverage(c.coverage);
      min_cov = std::min(min_cov, mc);
      out += prefix + "," + std::to_string(c.context) + "," +
             FormatNumber(c.energy_distance) + "," + FormatNumber(c.mmd) +
             "," + FormatNumber(c.bandwidth) + "," +
             (c.coverage.collapsed ? "1" : "0") + "," + FormatNumber(mc) +
             "\n";
    }
    out += prefix + ",all," + FormatNumber(q.energy_distance) + "," +
           FormatNumber(q.mmd) + ",," + std::to_string(q.collapsed_contexts) +
           "," + FormatNumber(min_cov) + "\n";
  }
  return out;
}

std::vector<FrontierRow> RunBench(const TrainedModel& cf,
                                  const TrainedModel& fm,
                                  const RunConfig& config) {
  const TaskSpec task = config.task.Build();
  std::vector<std::unique_ptr<Sampler>> samplers = ModelSamplers(cf, config);
  for (auto& s : ModelSamplers(fm, config)) samplers.push_back(std::move(s));
  const Tensor contexts = task.ContextGrid(1);
  std::vector<FrontierRow> rows;
  for (const auto& s : samplers) {
    Rng eval_rng = SamplerRng(config.train.seed, s->label(), kEvalStream);
    const QualityReport q =
        EvaluateQuality(*s, task, MakeQualityOptions(config), eval_rng);
    Rng bench_rng = SamplerRng(config.train.seed, s->label(), kBenchStream);
    const LatencyRecord lat =
        LatencyBench(*s, contexts, config.eval.bench_repetitions, bench_rng,
                     config.eval.bench_warmup);
    FrontierRow row;
    row.label = s->label();
    row.nfe = lat.nfe;
    row.energy_distance = q.energy_distance;
    row.mmd = q.mmd;
    row.collapsed = q.collapsed();
    row.latency_ms = lat.mean_ms;
    if (lat.stage_mean_ms.size() == 2) {
      row.coarse_ms = lat.stage_mean_ms[0];
      row.fine_ms = lat.stage_mean_ms[1];
    }
    rows.push_back(row);
  }
  return FrontierReport(std::move(rows));
}

RunConfig AblationVariant(const RunConfig& base, const std::string& label) {
  RunConfig c = base;
  if (label == "full") return c;
  if (label == "w/o Phase I") {
    // Same update budget, all of it on the joint objective.
    c.schedule.phase2_steps += c.schedule.phase1_steps;
    c.schedule.phase1_steps = 0;
  } else if (label == "w/o Phase II") {
    c.schedule.phase2_steps = 0;
    c.schedule.UseWarmupInference();
  } else if (label == "w/o var. mod.") {
    c.schedule.learn_variance = false;
  } else if (label == "w/o refine.") {
    c.schedule.refine = false;
  } else {
    throw std::invalid_argument("unknown ablation variant '" + label + "'");
  }
  return c;
}

std::vector<AblationRow> RunAblation(const RunConfig& config, EventLog& log) {
  const TaskSpec task = config.task.Build();
  std::vector<AblationRow> rows;
  for (std::size_t k = 0; k < config.eval.ablate_seeds; ++k) {
    const std::uint64_t seed = config.train.seed + k;
    for (const char* label : kAblationLabels) {
      RunConfig c = AblationVariant(config, label);
      c.train.seed = seed;
      log.Write("variant", {{"label", label}}, {},
                {{"seed", static_cast<std::int64_t>(seed)}});
      EventLog quiet;
      const TrainedModel model = TrainModel(c, ModelKind::kCoarseToFine, quiet);
      const TwoStepSampler sampler(model.net, c.schedule, label);
      Rng eval_rng = StreamRng(seed, kEvalStream);
      AblationRow row;
      row.label = label;
      row.seed = seed;
      row.nfe = sampler.nfe();
      row.quality =
          EvaluateQuality(sampler, task, MakeQualityOptions(c), eval_rng);
      log.Write("variant_done", {{"label", label}},
                {{"energy_distance", row.quality.energy_distance}},
                {{"seed", static_cast<std::int64_t>(seed)}});
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string AblationCsvHeader() {
  return "label,seed,nfe,energy_distance,mmd,collapsed_contexts";
}

std::string AblationCsvRow(const AblationRow& r) {
  return r.label + "," + std::to_string(r.seed) + "," + std::to_string(r.nfe) +
         "," + FormatNumber(r.quality.energy_distance) + "," +
         FormatNumber(r.quality.mmd) + "," +
         std::to_string(r.quality.collapsed_contexts);
}

std::vector<SweepCell> SweepGrid(const RunConfig& base) {
  std::vector<SweepCell> cells;
  auto add = [&](const std::string& grid, auto mutate) {
    SweepCell cell{grid, 0, base};
    for (const SweepCell& c : cells) cell.index += c.grid == grid;
    mutate(cell.config.schedule);
    cells.push_back(std::move(cell));
  };
  for (const std::string& grid : base.eval.sweep_grids) {
    if (grid == "sigma2") {
      for (double v : {0.005, 0.01, 0.01235, 0.02, 0.04}) {
        add(grid, [v](PhaseSchedule& s) { s.sigma2_noise = v; });
      }
    } else if (grid == "gamma") {
      for (double v : {0.001, 0.005, 0.01, 0.01235, 0.02, 0.04, 0.05, 0.1}) {
        add(grid, [v](PhaseSchedule& s) { s.gamma = v; });
      }
    } else if (grid == "lambda") {
      const std::pair<double, double> pairs[] = {
          {0.01, 0.01}, {0.05, 0.05}, {0.1, 0.1}, {0.2, 0.2}, {1.0, 1.0},
          {0.1, 0.05},  {0.05, 0.1},  {0.2, 0.1}, {0.1, 0.2}, {1.0, 0.1}};
      for (auto [l1, l2] : pairs) {
        add(grid, [l1, l2](PhaseSchedule& s) {
          s.lambda_1 = l1;
          s.lambda_2 = l2;
        });
      }
    } else if (grid == "loss") {
      for (CoarseLoss l : {CoarseLoss::kKl, CoarseLoss::kNll}) {
        add(grid, [l](PhaseSchedule& s) { s.coarse_loss_type = l; });
      }
    } else {
      throw std::invalid_argument("unknown sweep grid '" + grid + "'");
    }
  }
  return cells;
}

std::vector<SweepRow> RunSweep(const RunConfig& config,
                               const std::string& out) {
  const std::vector<SweepCell> cells = SweepGrid(config);
  std::vector<SweepRow> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        SweepCell cell = cells[i];
        std::unique_ptr<EventLog> log = std::make_unique<EventLog>();
        if (!out.empty()) {
          const fs::path dir = fs::path(out) / "cells" /
                               (cell.grid + "-" + std::to_string(cell.index));
          fs::create_directories(dir);
          cell.config.out = dir.string();
          WriteFile(dir / "config.txt", SerializeConfig(cell.config));
          log = std::make_unique<EventLog>((dir / "events.jsonl").string());
        }
        const TrainedModel model =
            TrainModel(cell.config, ModelKind::kCoarseToFine, *log);
        if (!out.empty()) {
          WriteFile(fs::path(cell.config.out) / "train_report.csv",
                    TrainReportCsv(model.report));
        }
        const TaskSpec task = cell.config.task.Build();
        const TwoStepSampler sampler(model.net, cell.config.schedule, "CF@2");
        Rng eval_rng = StreamRng(cell.config.train.seed, kEvalStream);
        rows[i] = SweepRow{
            cell, EvaluateQuality(sampler, task,
                                  MakeQualityOptions(cell.config), eval_rng)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::min(config.eval.sweep_workers, std::max<std::size_t>(1, cells.size()));
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string SweepCsvHeader() {
  return "grid,cell,sigma2_noise,gamma,lambda_1,lambda_2,coarse_loss_type,"
         "energy_distance,mmd,collapsed_contexts";
}

std::string SweepCsvRow(const SweepRow& r) {
  const PhaseSchedule& s = r.cell.config.schedule;
  return r.cell.grid + "," + std::to_string(r.cell.index) + "," +
         FormatNumber(s.sigma2_noise) + "," + FormatNumber(s.gamma) + "," +
         FormatNumber(s.lambda_1) + "," + FormatNumber(s.lambda_2) + "," +
         CoarseLossName(s.coarse_loss_type) + "," +
         FormatNumber(r.quality.energy_distance) + "," +
         FormatNumber(r.quality.mmd) + "," +
         std::to_string(r.quality.collapsed_contexts);
}

int CmdTrain(const RunConfig& config) {
  const fs::path out = PrepareOut(config);
  EventLog log((out / "events.jsonl").string());
  log.Write("start", {{"command", "train"}, {"model", ModelKindName(config.model)}});
  const TrainedModel model = TrainModel(config, config.model, log);
  SaveCheckpoint((out / "checkpoint.txt").string(),
                 MakeCheckpoint(model.net, config, model.rng));
  WriteFile(out / "train_report.csv", TrainReportCsv(model.report));
  log.Write("done", {{"command", "train"}});
  return 0;
}

namespace {

std::vector<TrainedModel> LoadOrTrain(const RunConfig& config,
                                      const std::vector<std::string>& paths,
                                      std::vector<ModelKind> needed,
                                      EventLog& log) {
  std::vector<TrainedModel> models;
  for (const std::string& p : paths) {
    models.push_back(FromCheckpoint(LoadCheckpoint(p)));
    log.Write("loaded", {{"checkpoint", p},
                         {"model", ModelKindName(models.back().kind)}});
  }
  for (ModelKind kind : needed) {
    bool have = false;
    for (const TrainedModel& m : models) have |= m.kind == kind;
    if (!have) models.push_back(TrainModel(config, kind, log));
  }
  return models;
}

}  // namespace

int CmdEval(const RunConfig& config,
            const std::vector<std::string>& checkpoints) {
  const fs::path out = PrepareOut(config);
  EventLog log((out / "events.jsonl").string());
  log.Write("start", {{"command", "eval"}});
  std::vector<ModelKind> needed;
  if (checkpoints.empty()) needed.push_back(config.model);
  const std::vector<TrainedModel> models =
      LoadOrTrain(config, checkpoints, needed, log);
  const TaskSpec task = config.task.Build();
  std::vector<std::unique_ptr<Sampler>> owned;
  for (const TrainedModel& m : models) {
    for (auto& s : ModelSamplers(m, config)) owned.push_back(std::move(s));
  }
  std::vector<const Sampler*> samplers;
  for (const auto& s : owned) samplers.push_back(s.get());
  Rng rng = StreamRng(config.train.seed, kEvalStream);
  WriteFile(out / "metrics.csv", MetricsCsv(samplers, task, config, rng));
  log.Write("done", {{"command", "eval"}});
  return 0;
}

int CmdBench(const RunConfig& config,
             const std::vector<std::string>& checkpoints) {
  const fs::path out = PrepareOut(config);
  EventLog log((out / "events.jsonl").string());
  log.Write("start", {{"command", "bench"}});
  const std::vector<TrainedModel> models = LoadOrTrain(
      config, checkpoints,
      {ModelKind::kCoarseToFine, ModelKind::kFlowMatching}, log);
  const TrainedModel* cf = nullptr;
  const TrainedModel* fm = nullptr;
  for (const TrainedModel& m : models) {
    if (m.kind == ModelKind::kCoarseToFine && cf == nullptr) cf = &m;
    if (m.kind == ModelKind::kFlowMatching && fm == nullptr) fm = &m;
  }
  const std::vector<FrontierRow> rows = RunBench(*cf, *fm, config);
  std::string csv = FrontierCsvHeader() + "\n";
  for (const FrontierRow& r : rows) csv += FrontierCsvRow(r) + "\n";
  WriteFile(out / "frontier.csv", csv);
  log.Write("done", {{"command", "bench"}},
            {{"reference_ratio", kReferenceTwoStepMs / kReferenceTenStepMs}});
  return 0;
}

int CmdAblate(const RunConfig& config) {
  const fs::path out = PrepareOut(config);
  EventLog log((out / "events.jsonl").string());
  log.Write("start", {{"command", "ablate"}});
  std::string csv = AblationCsvHeader() + "\n";
  for (const AblationRow& r : RunAblation(config, log)) {
    csv += AblationCsvRow(r) + "\n";
  }
  WriteFile(out / "ablation.csv", csv);
  log.Write("done", {{"command", "ablate"}});
  return 0;
}

int CmdSweep(const RunConfig& config) {
  const fs::path out = PrepareOut(config);
  EventLog log((out / "events.jsonl").string());
  log.Write("start", {{"command", "sweep"}});
  std::string csv = SweepCsvHeader() + "\n";
  for (const SweepRow& r : RunSweep(config, out.string())) {
    csv += SweepCsvRow(r) + "\n";
    log.Write("cell", {{"grid", r.cell.grid}},
              {{"energy_distance", r.quality.energy_distance}},
              {{"cell", static_cast<std::int64_t>(r.cell.index)}});
  }
  WriteFile(out / "sweep.csv", csv);
  log.Write("done", {{"command", "sweep"}});
  return 0;
}

}  // namespace c2f::cli
