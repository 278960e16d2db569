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

#ifndef C2F_EVAL_H_
#define C2F_EVAL_H_

#include <cstddef>
#include <string>
#include <vector>

#include "c2f/coarse2fine.h"
#include "c2f/flow.h"
#include "c2f/tasks.h"
#include "c2f/tensor.h"

namespace c2f {

// Energy distance between two sample sets (rows are flattened chunks):
// 2 E|x - y| - E|x - x'| - E|y - y'|, every expectation taken over all
// ordered pairs including i == j (V-statistic). Nonnegative, symmetric, and
// exactly zero for identical multisets.
double EnergyDistance(const Tensor& x, const Tensor& y);

enum class MmdEstimator { kUnbiased, kBiased };

// Squared MMD with k(a, b) = exp(-|a - b|^2 / (2 h^2)). The unbiased
// estimator drops i == j self-pairs and needs at least two rows per side; it
// can go slightly negative. The biased estimator keeps them and is >= 0.
double MmdRbf(const Tensor& x, const Tensor& y, double bandwidth,
              MmdEstimator estimator = MmdEstimator::kUnbiased);
// Median pairwise distance over the pooled sample.
double MedianHeuristicBandwidth(const Tensor& x, const Tensor& y);

struct ModeCoverage {
  std::vector<double> fractions;  // per mode
  bool collapsed = false;
};

// Fraction of samples within `radius` of each mode (by nearest mode), and
// whether any positively weighted mode got no hits.
ModeCoverage ComputeModeCoverage(const Tensor& samples, const TaskSpec& task,
                                 std::size_t context, double radius);

// Anything that draws action chunks for a batch of contexts.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual std::string label() const = 0;
  virtual int nfe() const = 0;
  virtual SampleResult Sample(const Tensor& contexts, Rng& rng) const = 0;
};

class EulerSampler : public Sampler {
 public:
  EulerSampler(const Denoiser& net, int steps, std::string label);
  std::string label() const override { return label_; }
  int nfe() const override { return steps_; }
  SampleResult Sample(const Tensor& contexts, Rng& rng) const override;

 private:
  const Denoiser& net_;
  int steps_;
  std::string label_;
};

class TwoStepSampler : public Sampler {
 public:
  TwoStepSampler(const Denoiser& net, PhaseSchedule schedule,
                 std::string label);
  std::string label() const override { return label_; }
  int nfe() const override { return schedule_.refine ? 2 : 1; }
  SampleResult Sample(const Tensor& contexts, Rng& rng) const override;

 private:
  const Denoiser& net_;
  PhaseSchedule schedule_;
  std::string label_;
};

// Exact draws from the task distribution. Zero network evaluations.
class OracleSampler : public Sampler {
 public:
  explicit OracleSampler(const TaskSpec& task) : task_(task) {}
  std::string label() const override { return "oracle"; }
  int nfe() const override { return 0; }
  SampleResult Sample(const Tensor& contexts, Rng& rng) const override;

 private:
  const TaskSpec& task_;
};

// Returns the mean of one fixed mode for every row: a maximally collapsed
// control. Reports `nfe` without doing any work and records two empty
// stages.
class ConstantModeSampler : public Sampler {
 public:
  ConstantModeSampler(const TaskSpec& task, std::size_t mode, int nfe,
                      std::string label);
  std::string label() const override { return label_; }
  int nfe() const override { return nfe_; }
  SampleResult Sample(const Tensor& contexts, Rng& rng) const override;

 private:
  const TaskSpec& task_;
  std::size_t mode_;
  int nfe_;
  std::string label_;
};

struct ContextQuality {
  std::size_t context = 0;
  double energy_distance = 0.0;
  double mmd = 0.0;
  double bandwidth = 0.0;
  ModeCoverage coverage;
};

struct QualityReport {
  std::vector<ContextQuality> contexts;
  double energy_distance = 0.0;  // mean over contexts
  double mmd = 0.0;              // mean over contexts
  std::size_t collapsed_contexts = 0;
  bool collapsed() const { return collapsed_contexts > 0; }
};

struct QualityOptions {
  std::size_t samples_per_context = 500;
  double coverage_radius = 0.5;
};

// Draws samples_per_context chunks from the sampler and from the oracle for
// every context and compares them.
QualityReport EvaluateQuality(const Sampler& sampler, const TaskSpec& task,
                              const QualityOptions& options, Rng& rng);

// Published reference sampling latencies (ms), used as the comparison
// constant in bench reports.
inline constexpr double kReferenceTwoStepMs = 7.81;
inline constexpr double kReferenceTenStepMs = 29.17;

struct LatencyRecord {
  std::string label;
  int nfe = 0;
  std::size_t repetitions = 0;
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
  std::vector<double> stage_mean_ms;  // coarse, fine for two-step samplers
  std::vector<double> samples_ms;     // one per timed repetition
};

struct BenchReport {
  std::vector<LatencyRecord> records;
  double reference_ratio = kReferenceTwoStepMs / kReferenceTenStepMs;
};

// Times only the Sample() call, one chunk per call, cycling through the rows
// of `contexts`. `warmup` untimed calls come first. Run single-threaded.
LatencyRecord LatencyBench(const Sampler& sampler, const Tensor& contexts,
                           std::size_t repetitions, Rng& rng,
                           std::size_t warmup = 10);

struct FrontierRow {
  std::string label;
  int nfe = 0;
  double energy_distance = 0.0;
  double mmd = 0.0;
  bool collapsed = false;
  double latency_ms = 0.0;
  double coarse_ms = 0.0;  // zero when the sampler has no coarse stage
  double fine_ms = 0.0;
};

// Sorted by nfe, then label.
std::vector<FrontierRow> FrontierReport(std::vector<FrontierRow> rows);
std::string FrontierCsvHeader();
std::string FrontierCsvRow(const FrontierRow& row);

}  // namespace c2f

#endif  // C2F_EVAL_H_
