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

#include "c2f/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace c2f {

namespace {

double RowDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double MeanPairwise(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      s += RowDistance(a.row(i), b.row(j));
    }
  }
  return s / static_cast<double>(a.rows() * b.rows());
}

void CheckSamples(const Tensor& x, const Tensor& y, const char* what) {
  if (x.empty() || y.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty sample set");
  }
  if (x.cols() != y.cols()) {
    throw ShapeError(std::string(what) + ": sample widths differ");
  }
}

}  // namespace

double EnergyDistance(const Tensor& x, const Tensor& y) {
  CheckSamples(x, y, "energy distance");
  const double cross = MeanPairwise(x, y);
  // Symmetrize the cross term so ED(x, y) == ED(y, x) bit for bit.
  const double cross_t = MeanPairwise(y, x);
  return (cross + cross_t) - MeanPairwise(x, x) - MeanPairwise(y, y);
}

double MmdRbf(const Tensor& x, const Tensor& y, double bandwidth,
              MmdEstimator estimator) {
  CheckSamples(x, y, "mmd");
  if (!(bandwidth > 0.0)) throw DomainError("mmd: bandwidth must be > 0");
  const bool unbiased = estimator == MmdEstimator::kUnbiased;
  if (unbiased && (x.rows() < 2 || y.rows() < 2)) {
    throw std::invalid_argument("mmd: unbiased estimator needs n >= 2");
  }
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  auto kernel_mean = [&](const Tensor& a, const Tensor& b, bool same) {
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < b.rows(); ++j) {
        if (same && unbiased && i == j) continue;
        const double d = RowDistance(a.row(i), b.row(j));
        s += std::exp(-d * d * inv);
        ++count;
      }
    }
    return s / static_cast<double>(count);
  };
  return kernel_mean(x, x, true) + kernel_mean(y, y, true) -
         2.0 * kernel_mean(x, y, false);
}

double MedianHeuristicBandwidth(const Tensor& x, const Tensor& y) {
  CheckSamples(x, y, "bandwidth");
  std::vector<const Tensor*> sets = {&x, &y};
  std::vector<std::span<const double>> rows;
  for (const Tensor* t : sets) {
    for (std::size_t i = 0; i < t->rows(); ++i) rows.push_back(t->row(i));
  }
  std::vector<double> d;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      d.push_back(RowDistance(rows[i], rows[j]));
    }
  }
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  const double median = d[d.size() / 2];
  return median > 0.0 ? median : 1.0;
}

ModeCoverage ComputeModeCoverage(const Tensor& samples, const TaskSpec& task,
                                 std::size_t context, double radius) {
  if (!(radius > 0.0)) throw DomainError("mode coverage: radius must be > 0");
  const auto& modes = task.modes.at(context);
  ModeCoverage out;
  out.fractions.assign(modes.size(), 0.0);
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const NearestMode nearest = FindNearestMode(task, context, samples.row(i));
    if (nearest.distance < radius) out.fractions[nearest.index] += 1.0;
  }
  for (double& f : out.fractions) f /= static_cast<double>(samples.rows());
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (modes[k].weight > 0.0 && out.fractions[k] == 0.0) out.collapsed = true;
  }
  return out;
}

EulerSampler::EulerSampler(const Denoiser& net, int steps, std::string label)
    : net_(net), steps_(steps), label_(std::move(label)) {
  if (steps < 1) throw DomainError("euler sampler: steps must be >= 1");
}

SampleResult EulerSampler::Sample(const Tensor& contexts, Rng& rng) const {
  using Clock = std::chrono::steady_clock;
  const auto begin = Clock::now();
  SampleResult r = EulerSample(net_, contexts, steps_, rng);
  r.stage_ms = {
      std::chrono::duration<double, std::milli>(Clock::now() - begin).count()};
  return r;
}

TwoStepSampler::TwoStepSampler(const Denoiser& net, PhaseSchedule schedule,
                               std::string label)
    : net_(net), schedule_(std::move(schedule)), label_(std::move(label)) {
  schedule_.Validate();
}

SampleResult TwoStepSampler::Sample(const Tensor& contexts, Rng& rng) const {
  return TwoStepSample(net_, contexts, schedule_, rng);
}

SampleResult OracleSampler::Sample(const Tensor& contexts, Rng& rng) const {
  SampleResult r;
  r.actions = Tensor::Matrix(contexts.rows(), task_.chunk_width());
  for (std::size_t i = 0; i < contexts.rows(); ++i) {
    const Tensor draw =
        OracleSample(task_, task_.ContextIndex(contexts.row(i)), 1, rng);
    std::copy(draw.values().begin(), draw.values().end(),
              r.actions.row(i).begin());
  }
  return r;
}

ConstantModeSampler::ConstantModeSampler(const TaskSpec& task,
                                         std::size_t mode, int nfe,
                                         std::string label)
    : task_(task), mode_(mode), nfe_(nfe), label_(std::move(label)) {}

SampleResult ConstantModeSampler::Sample(const Tensor& contexts,
                                         Rng& /*rng*/) const {
  using Clock = std::chrono::steady_clock;
  SampleResult r;
  r.nfe = nfe_;
  r.actions = Tensor::Matrix(contexts.rows(), task_.chunk_width());
  for (std::size_t i = 0; i < contexts.rows(); ++i) {
    const Tensor& mean =
        task_.modes.at(task_.ContextIndex(contexts.row(i))).at(mode_).mean;
    std::copy(mean.values().begin(), mean.values().end(),
              r.actions.row(i).begin());
  }
  const auto begin = Clock::now();
  const auto mid = Clock::now();
  const auto end = Clock::now();
  r.stage_ms = {std::chrono::duration<double, std::milli>(mid - begin).count(),
                std::chrono::duration<double, std::milli>(end - mid).count()};
  return r;
}

QualityReport EvaluateQuality(const Sampler& sampler, const TaskSpec& task,
                              const QualityOptions& options, Rng& rng) {
  QualityReport report;
  const std::size_t n = options.samples_per_context;
  for (std::size_t c = 0; c < task.num_contexts(); ++c) {
    Tensor contexts = Tensor::Matrix(n, task.context_dim());
    for (std::size_t i = 0; i < n; ++i) contexts.at(i, c) = 1.0;
    const Tensor generated = sampler.Sample(contexts, rng).actions;
    const Tensor reference = OracleSample(task, c, n, rng);
    ContextQuality q;
    q.context = c;
    q.energy_distance = EnergyDistance(generated, reference);
    q.bandwidth = MedianHeuristicBandwidth(generated, reference);
    q.mmd = MmdRbf(generated, reference, q.bandwidth);
    q.coverage =
        ComputeModeCoverage(generated, task, c, options.coverage_radius);
    report.energy_distance += q.energy_distance;
    report.mmd += q.mmd;
    if (q.coverage.collapsed) ++report.collapsed_contexts;
    report.contexts.push_back(std::move(q));
  }
  report.energy_distance /= static_cast<double>(task.num_contexts());
  report.mmd /= static_cast<double>(task.num_contexts());
  return report;
}

LatencyRecord LatencyBench(const Sampler& sampler, const Tensor& contexts,
                           std::size_t repetitions, Rng& rng,
                           std::size_t warmup) {
  using Clock = std::chrono::steady_clock;
  if (repetitions < 30) {
    throw std::invalid_argument("latency bench: repetitions must be >= 30");
  }
  auto context_row = [&](std::size_t i) {
    return SliceRows(contexts, i % contexts.rows(), i % contexts.rows() + 1);
  };
  for (std::size_t i = 0; i < warmup; ++i) sampler.Sample(context_row(i), rng);

  LatencyRecord rec;
  rec.label = sampler.label();
  rec.nfe = sampler.nfe();
  rec.repetitions = repetitions;
  std::vector<double> stage_sum;
  for (std::size_t i = 0; i < repetitions; ++i) {
    const Tensor c = context_row(i);
    const auto begin = Clock::now();
    const SampleResult r = sampler.Sample(c, rng);
    const double ms =
        std::chrono::duration<double, std::milli>(Clock::now() - begin)
            .count();
    rec.samples_ms.push_back(ms);
    rec.nfe = r.nfe;
    stage_sum.resize(std::max(stage_sum.size(), r.stage_ms.size()), 0.0);
    for (std::size_t s = 0; s < r.stage_ms.size(); ++s) {
      stage_sum[s] += r.stage_ms[s];
    }
  }
  const double n = static_cast<double>(repetitions);
  rec.mean_ms =
      std::accumulate(rec.samples_ms.begin(), rec.samples_ms.end(), 0.0) / n;
  double var = 0.0;
  for (double v : rec.samples_ms) var += (v - rec.mean_ms) * (v - rec.mean_ms);
  rec.stddev_ms = std::sqrt(var / std::max(1.0, n - 1.0));
  for (double s : stage_sum) rec.stage_mean_ms.push_back(s / n);
  return rec;
}

std::vector<FrontierRow> FrontierReport(std::vector<FrontierRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FrontierRow& a, const FrontierRow& b) {
                     if (a.nfe != b.nfe) return a.nfe < b.nfe;
                     return a.label < b.label;
                   });
  return rows;
}

std::string FrontierCsvHeader() {
  return "label,nfe,energy_distance,mmd,collapsed,latency_ms,coarse_ms,"
         "fine_ms";
}

std::string FrontierCsvRow(const FrontierRow& row) {
  std::ostringstream out;
  out.precision(17);
  out << row.label << ',' << row.nfe << ',' << row.energy_distance << ','
      << row.mmd << ',' << (row.collapsed ? 1 : 0) << ',' << row.latency_ms
      << ',' << row.coarse_ms << ',' << row.fine_ms;
  return out.str();
}

}  // namespace c2f
