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

#include "c2f/coarse2fine.h"

#include <chrono>
#include <cmath>
#include <random>
#include <utility>

#include "c2f/adam.h"

namespace c2f {

const char* CoarseStartName(CoarseStart v) {
  return v == CoarseStart::kZeros ? "zeros" : "gaussian";
}

const char* CoarseOutputName(CoarseOutput v) {
  return v == CoarseOutput::kMode ? "mode" : "sample";
}

const char* CoarseLossName(CoarseLoss v) {
  switch (v) {
    case CoarseLoss::kMseLogvar:
      return "mse_logvar";
    case CoarseLoss::kKl:
      return "kl";
    case CoarseLoss::kNll:
      return "nll";
  }
  return "?";
}

CoarseStart ParseCoarseStart(const std::string& s) {
  if (s == "zeros") return CoarseStart::kZeros;
  if (s == "gaussian") return CoarseStart::kGaussian;
  throw std::invalid_argument("unknown coarse start '" + s + "'");
}

CoarseOutput ParseCoarseOutput(const std::string& s) {
  if (s == "mode") return CoarseOutput::kMode;
  if (s == "sample") return CoarseOutput::kSample;
  throw std::invalid_argument("unknown coarse output '" + s + "'");
}

CoarseLoss ParseCoarseLoss(const std::string& s) {
  if (s == "mse_logvar") return CoarseLoss::kMseLogvar;
  if (s == "kl") return CoarseLoss::kKl;
  if (s == "nll") return CoarseLoss::kNll;
  throw std::invalid_argument("unknown coarse loss '" + s + "'");
}

double PhaseSchedule::target_logvar() const { return std::log(sigma2_noise); }

void PhaseSchedule::Validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("schedule." + key + ": " + why);
  };
  if (!(sigma2_noise > 0.0)) fail("sigma2_noise", "must be > 0");
  if (!(gamma >= 0.0)) fail("gamma", "must be >= 0");
  if (!(lambda_1 >= 0.0)) fail("lambda_1", "must be >= 0");
  if (!(lambda_2 >= 0.0)) fail("lambda_2", "must be >= 0");
  if (!(alpha >= 0.0)) fail("alpha", "must be >= 0");
  if (!(t_f > 0.0 && t_f < 1.0)) fail("t_f", "must lie in (0, 1)");
  if (!(t1 > t_f && t1 <= 1.0)) fail("t1", "must lie in (t_f, 1]");
  if (!(fine_dt_scale > 0.0 && fine_dt_scale <= 1.0)) {
    fail("fine_dt_scale", "must lie in (0, 1]");
  }
  if (!(fine_x_scale > 0.0 && fine_x_scale <= 1.0)) {
    fail("fine_x_scale", "must lie in (0, 1]");
  }
  if (flow_num < 1) fail("flow_num", "must be >= 1");
  for (double t : times_list_train) {
    if (!(t > 0.0 && t < 1.0)) fail("times_list_train", "times in (0, 1)");
  }
  if (phase2_steps > 0 && coarse_loss_type == CoarseLoss::kMseLogvar) {
    fail("coarse_loss_type", "joint phase needs kl or nll");
  }
}

void PhaseSchedule::UseWarmupInference() {
  fine_x_scale = 1.0 - t_f;
  fine_dt_scale = t_f;
}

void PhaseSchedule::UseJointInference() {
  fine_x_scale = 1.0;
  fine_dt_scale = t_f;
}

CoarseTargets MakeCoarseTargets(const Tensor& actions, const Tensor& eps1,
                                double sigma2_noise) {
  RequireSameShape(actions, eps1, "coarse targets");
  if (!(sigma2_noise > 0.0)) throw DomainError("sigma2_noise must be > 0");
  Tensor u = eps1 - actions;
  Tensor logvar(u.shape(), std::log(sigma2_noise));
  DiagonalGaussian target(u, std::move(logvar));
  return CoarseTargets{std::move(u), std::move(target)};
}

double Phase1CoarseLoss(const DiagonalGaussian& posterior, const Tensor& u,
                        double sigma2_noise, double gamma) {
  RequireSameShape(posterior.mean(), u, "phase 1 coarse loss");
  const double target = std::log(sigma2_noise);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double dm = u[i] - posterior.mean()[i];
    const double dl = target - posterior.logvar()[i];
    s += dm * dm + gamma * dl * dl;
  }
  return s / static_cast<double>(u.size());
}

double Phase2CoarseLoss(const DiagonalGaussian& posterior, const Tensor& u,
                        double sigma2_noise, CoarseLoss type) {
  switch (type) {
    case CoarseLoss::kKl: {
      const CoarseTargets t = MakeCoarseTargets(Tensor(u.shape()), u,
                                                sigma2_noise);
      return Mean(posterior.Kl(t.target));
    }
    case CoarseLoss::kNll:
      return Mean(posterior.Nll(u));
    case CoarseLoss::kMseLogvar:
      break;
  }
  throw std::invalid_argument(std::string("phase 2 coarse loss: invalid type ") +
                              CoarseLossName(type));
}

Tensor ApInit(const Tensor& eps1, const Tensor& u_hat) {
  RequireSameShape(eps1, u_hat, "ap init");
  return eps1 - u_hat;
}

Var TracePhase1CoarseLoss(Graph& graph, const GaussianVar& posterior,
                          const Tensor& u, double sigma2_noise, double gamma) {
  Var mean_err = graph.Square(graph.Sub(graph.Constant(u), posterior.mean));
  Var logvar_err = graph.Square(graph.Sub(
      graph.Constant(Tensor(u.shape(), std::log(sigma2_noise))),
      posterior.logvar));
  return graph.Mean(graph.Add(mean_err, graph.Scale(logvar_err, gamma)));
}

Var TracePhase2CoarseLoss(Graph& graph, const GaussianVar& posterior,
                          const Tensor& u, double sigma2_noise,
                          CoarseLoss type) {
  switch (type) {
    case CoarseLoss::kKl: {
      GaussianVar target{
          graph.Constant(u),
          graph.Constant(Tensor(u.shape(), std::log(sigma2_noise)))};
      return TraceKlMean(graph, posterior, target);
    }
    case CoarseLoss::kNll:
      return TraceNllMean(graph, posterior, graph.Constant(u));
    case CoarseLoss::kMseLogvar:
      break;
  }
  throw std::invalid_argument(std::string("phase 2 coarse loss: invalid type ") +
                              CoarseLossName(type));
}

namespace {

Var TraceMeanHead(Graph& graph, Var raw) {
  const std::size_t width = graph.value(raw).cols();
  return graph.SliceCols(raw, 0, width / 2);
}

// Per-row fine times for training.
Tensor FineTimes(std::size_t rows, const PhaseSchedule& s, Rng& rng) {
  if (s.times_list_train.size() <= 1) {
    const double t =
        s.times_list_train.empty() ? s.t_f : s.times_list_train.front();
    return TimeColumn(rows, t);
  }
  std::uniform_int_distribution<std::size_t> pick(
      0, s.times_list_train.size() - 1);
  Tensor t = Tensor::Matrix(rows, 1);
  for (double& v : t.values()) v = s.times_list_train[pick(rng)];
  return t;
}

Tensor CoarseStartState(std::size_t rows, std::size_t width,
                        const PhaseSchedule& s, Rng& rng) {
  if (s.coarse_start == CoarseStart::kZeros) return Tensor::Matrix(rows, width);
  return RandomNormal({rows, width}, rng);
}

// Row-broadcast of a [B x 1] column across `width` columns.
Tensor Broadcast(const Tensor& column, std::size_t width) {
  Tensor out = Tensor::Matrix(column.rows(), width);
  for (std::size_t r = 0; r < column.rows(); ++r) {
    for (std::size_t c = 0; c < width; ++c) out.at(r, c) = column[r];
  }
  return out;
}

}  // namespace

Var TracePhase1ProxyLoss(Graph& graph, const Denoiser& net,
                         const Tensor& contexts, const Tensor& actions,
                         const Tensor& eps, const Tensor& t) {
  RequireSameShape(actions, eps, "proxy loss");
  Tensor x(actions.shape());
  const std::size_t width = actions.cols();
  for (std::size_t r = 0; r < actions.rows(); ++r) {
    const double tr = t[r];
    if (!(tr > 0.0 && tr < 1.0)) throw DomainError("proxy loss: t_f in (0,1)");
    for (std::size_t c = 0; c < width; ++c) {
      x.at(r, c) = tr * eps.at(r, c) + (1.0 - tr) * actions.at(r, c);
    }
  }
  Var raw = net.Trace(graph, graph.Constant(contexts),
                      graph.Constant(std::move(x)), graph.Constant(t));
  Var target = graph.Constant(eps - actions);
  return graph.Mean(graph.Square(graph.Sub(TraceMeanHead(graph, raw), target)));
}

double Phase1ProxyLoss(const Denoiser& net, const Tensor& contexts,
                       const Tensor& actions, const Tensor& eps, double t_f) {
  Graph graph;
  Var loss = TracePhase1ProxyLoss(graph, net, contexts, actions, eps,
                                  TimeColumn(actions.rows(), t_f));
  return graph.scalar(loss);
}

Var TracePhase2FineLoss(Graph& graph, const Denoiser& net,
                        const Tensor& contexts, const Tensor& actions,
                        Var eps_tilde, Var x, const Tensor& t) {
  RequireSameShape(graph.value(eps_tilde), actions, "fine loss");
  for (double v : t.values()) {
    if (!(v > 0.0 && v < 1.0)) throw DomainError("fine loss: t_f in (0,1)");
  }
  Var raw = net.Trace(graph, graph.Constant(contexts), x, graph.Constant(t));
  Var target = graph.Sub(eps_tilde, graph.Constant(actions));
  return graph.Mean(graph.Square(graph.Sub(TraceMeanHead(graph, raw), target)));
}

double Phase2FineLoss(const Denoiser& net, const Tensor& contexts,
                      const Tensor& actions, const Tensor& eps_tilde,
                      double t_f) {
  Graph graph;
  Var e = graph.Constant(eps_tilde);
  Var loss = TracePhase2FineLoss(graph, net, contexts, actions, e, e,
                                 TimeColumn(actions.rows(), t_f));
  return graph.scalar(loss);
}

GaussianVar TracePosterior(Graph& graph, Var raw, const PhaseSchedule& s) {
  GaussianVar g = TraceGaussian(graph, raw);
  if (!s.learn_variance) {
    g.logvar = graph.Constant(
        Tensor(graph.value(g.mean).shape(), s.target_logvar()));
  }
  return g;
}

DiagonalGaussian PosteriorFromRaw(const Tensor& raw, const PhaseSchedule& s) {
  DiagonalGaussian g = DiagonalGaussian::FromParameters(raw);
  if (s.learn_variance) return g;
  return DiagonalGaussian(g.mean(), Tensor(g.mean().shape(), s.target_logvar()));
}

LossTrace TracePhase1Total(Graph& graph, const Denoiser& net,
                           const FlowBatch& batch, const PhaseSchedule& s,
                           Rng& rng) {
  batch.Validate();
  const std::size_t rows = batch.size();
  const std::size_t width = batch.actions.cols();

  Tensor start = CoarseStartState(rows, width, s, rng);
  Var raw = net.Trace(graph, graph.Constant(batch.contexts),
                      graph.Constant(start),
                      graph.Constant(TimeColumn(rows, s.t1)));
  GaussianVar posterior = TracePosterior(graph, raw, s);
  Var coarse = TracePhase1CoarseLoss(graph, posterior, start - batch.actions,
                                     s.sigma2_noise, s.gamma);

  Tensor eps = RandomNormal({rows, width}, rng);
  Tensor t = FineTimes(rows, s, rng);
  Var proxy =
      TracePhase1ProxyLoss(graph, net, batch.contexts, batch.actions, eps, t);

  Var total = graph.Add(graph.Scale(proxy, s.alpha),
                        graph.Scale(coarse, s.lambda_1));
  return LossTrace{total, proxy, coarse, true};
}

LossTrace TracePhase2Total(Graph& graph, const Denoiser& net,
                           const FlowBatch& batch, const PhaseSchedule& s,
                           Rng& rng) {
  batch.Validate();
  const std::size_t rows = batch.size();
  const std::size_t width = batch.actions.cols();

  Tensor start = CoarseStartState(rows, width, s, rng);
  Var start_var = graph.Constant(start);
  Var raw = net.Trace(graph, graph.Constant(batch.contexts), start_var,
                      graph.Constant(TimeColumn(rows, s.t1)));
  GaussianVar posterior = TracePosterior(graph, raw, s);
  Var coarse = TracePhase2CoarseLoss(graph, posterior, start - batch.actions,
                                     s.sigma2_noise, s.coarse_loss_type);

  Var fine;
  for (int f = 0; f < s.flow_num; ++f) {
    Var u_hat = posterior.mean;
    if (s.coarse_output == CoarseOutput::kSample) {
      u_hat = TraceSample(graph, posterior, RandomNormal({rows, width}, rng));
    }
    Var eps_tilde = graph.Sub(start_var, graph.Scale(u_hat, s.t1));
    Tensor t = FineTimes(rows, s, rng);
    Var x = eps_tilde;
    if (s.noisy_actions) {
      Tensor keep = Broadcast(t, width);
      for (double& v : keep.values()) v = 1.0 - v;
      Tensor mix = Broadcast(t, width) * RandomNormal({rows, width}, rng);
      x = graph.Add(graph.Mul(eps_tilde, graph.Constant(std::move(keep))),
                    graph.Constant(std::move(mix)));
    }
    Var term = TracePhase2FineLoss(graph, net, batch.contexts, batch.actions,
                                   eps_tilde, x, t);
    fine = f == 0 ? term : graph.Add(fine, term);
  }
  if (s.flow_num > 1) fine = graph.Scale(fine, 1.0 / s.flow_num);

  Var total = graph.Add(fine, graph.Scale(coarse, s.lambda_2));
  return LossTrace{total, fine, coarse, true};
}

SampleResult TwoStepSample(const Denoiser& net, const Tensor& contexts,
                           const PhaseSchedule& s, Rng& rng) {
  using Clock = std::chrono::steady_clock;
  const std::size_t rows = contexts.rows();
  const std::size_t width = net.dims().chunk_width();
  SampleResult result;

  auto coarse_begin = Clock::now();
  Tensor start = CoarseStartState(rows, width, s, rng);
  DiagonalGaussian posterior = PosteriorFromRaw(
      net.Forward(contexts, start, TimeColumn(rows, s.t1)), s);
  ++result.nfe;
  Tensor u_hat = s.infer_coarse_output == CoarseOutput::kMode
                     ? posterior.Mode()
                     : posterior.Sample(RandomNormal({rows, width}, rng));
  Tensor x = start;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= s.t1 * u_hat[i];
  auto coarse_end = Clock::now();
  result.stage_ms.push_back(
      std::chrono::duration<double, std::milli>(coarse_end - coarse_begin)
          .count());
  if (!s.refine) {
    result.actions = std::move(x);
    return result;
  }

  if (s.noisy_actions) {
    Tensor eta = RandomNormal({rows, width}, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = (1.0 - s.t_f) * x[i] + s.t_f * eta[i];
    }
  }
  for (double& v : x.values()) v *= s.fine_x_scale;
  Tensor v = MeanHead(net.Forward(contexts, x, TimeColumn(rows, s.t_f)));
  ++result.nfe;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= s.fine_dt_scale * v[i];
  result.stage_ms.push_back(
      std::chrono::duration<double, std::milli>(Clock::now() - coarse_end)
          .count());
  result.actions = std::move(x);
  return result;
}

OracleDenoiser::OracleDenoiser(ModelDims dims, double sigma2_noise,
                               Field field)
    : dims_(dims), logvar_(std::log(sigma2_noise)), field_(field) {}

void OracleDenoiser::Add(Tensor context, const ActionChunk& chunk) {
  if (context.size() != dims_.context_dim ||
      chunk.values().size() != dims_.chunk_width()) {
    throw ShapeError("oracle: entry does not match model dims");
  }
  table_.emplace_back(context.Reshaped({context.size()}),
                      chunk.values().Reshaped({chunk.values().size()}));
}

const Tensor& OracleDenoiser::Lookup(std::span<const double> context) const {
  for (const auto& [key, chunk] : table_) {
    if (std::equal(key.values().begin(), key.values().end(), context.begin(),
                   context.end())) {
      return chunk;
    }
  }
  throw std::out_of_range("oracle: unknown context");
}

Tensor OracleDenoiser::Targets(const Tensor& contexts) const {
  Tensor out = Tensor::Matrix(contexts.rows(), dims_.chunk_width());
  for (std::size_t r = 0; r < contexts.rows(); ++r) {
    const Tensor& a = Lookup(contexts.row(r));
    std::copy(a.values().begin(), a.values().end(), out.row(r).begin());
  }
  return out;
}

Tensor OracleDenoiser::Scales(const Tensor& t) const {
  Tensor out = Tensor::Matrix(t.rows(), dims_.chunk_width(), 1.0);
  if (field_ == Field::kDisplacement) return out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (!(t[r] > 0.0)) throw DomainError("oracle: marginal field needs t > 0");
    for (double& v : out.row(r)) v = 1.0 / t[r];
  }
  return out;
}

Tensor OracleDenoiser::Forward(const Tensor& contexts, const Tensor& x,
                               const Tensor& t) const {
  CheckInputs(contexts, x, t);
  const Tensor mean = (x - Targets(contexts)) * Scales(t);
  const Tensor logvar(mean.shape(), logvar_);
  const Tensor* parts[] = {&mean, &logvar};
  return ConcatCols(parts);
}

Var OracleDenoiser::Trace(Graph& graph, Var contexts, Var x, Var t) const {
  CheckInputs(graph.value(contexts), graph.value(x), graph.value(t));
  Var mean = graph.Mul(
      graph.Sub(x, graph.Constant(Targets(graph.value(contexts)))),
      graph.Constant(Scales(graph.value(t))));
  Var logvar = graph.Constant(Tensor(graph.value(mean).shape(), logvar_));
  const Var parts[] = {mean, logvar};
  return graph.ConcatCols(parts);
}

OracleDenoiser MakeOracle(const TaskSpec& task, std::size_t mode,
                          double sigma2_noise, OracleDenoiser::Field field) {
  OracleDenoiser oracle(
      ModelDims{task.context_dim(), task.horizon, task.action_dim},
      sigma2_noise, field);
  for (std::size_t c = 0; c < task.num_contexts(); ++c) {
    const auto& modes = task.modes[c];
    oracle.Add(task.Context(c), ActionChunk(modes.at(mode % modes.size()).mean));
  }
  return oracle;
}

namespace {

void CheckFinite(const LossTerms& terms, int phase, std::size_t step) {
  if (!std::isfinite(terms.total) || !std::isfinite(terms.fine) ||
      !std::isfinite(terms.coarse)) {
    throw DivergenceError("training diverged at step " + std::to_string(step) +
                          " (phase " + std::to_string(phase) +
                          "): fine=" + std::to_string(terms.fine) +
                          " coarse=" + std::to_string(terms.coarse) +
                          " total=" + std::to_string(terms.total));
  }
}

template <typename Build>
TrainReport RunSteps(Mlp& net, const TaskSpec& task, const TrainConfig& cfg,
                     Rng& rng, std::size_t steps, int phase,
                     std::size_t first_step, AdamState& adam, Build build,
                     TrainReport report) {
  for (std::size_t i = 0; i < steps; ++i) {
    const FlowBatch batch = SampleBatch(task, cfg.batch_size, rng);
    LossEvaluation eval =
        EvaluateLoss(net, [&](Graph& g) { return build(g, batch, rng); });
    const std::size_t step = first_step + i;
    CheckFinite(eval.terms, phase, step);
    report.steps.push_back(StepRecord{phase, step, eval.terms});
    std::vector<Tensor*> params = net.parameters();
    AdamStep(params, eval.grads, adam);
  }
  return report;
}

}  // namespace

TrainReport TrainCoarseToFine(Mlp& net, const TaskSpec& task,
                              const PhaseSchedule& s, const TrainConfig& cfg,
                              Rng& rng) {
  s.Validate();
  if (s.phase1_steps + s.phase2_steps == 0) {
    throw std::invalid_argument("train: phase1_steps + phase2_steps must be >= 1");
  }
  const auto params = net.parameters();
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  AdamState adam(cparams, AdamOptions{cfg.learning_rate});
  TrainReport report;
  report = RunSteps(
      net, task, cfg, rng, s.phase1_steps, 1, 0, adam,
      [&](Graph& g, const FlowBatch& b, Rng& r) {
        return TracePhase1Total(g, net, b, s, r);
      },
      std::move(report));
  report = RunSteps(
      net, task, cfg, rng, s.phase2_steps, 2, s.phase1_steps, adam,
      [&](Graph& g, const FlowBatch& b, Rng& r) {
        return TracePhase2Total(g, net, b, s, r);
      },
      std::move(report));
  return report;
}

TrainReport TrainFlowMatching(Mlp& net, const TaskSpec& task,
                              std::size_t steps, const TrainConfig& cfg,
                              Rng& rng) {
  if (steps == 0) throw std::invalid_argument("train: steps must be >= 1");
  const auto params = net.parameters();
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  AdamState adam(cparams, AdamOptions{cfg.learning_rate});
  return RunSteps(
      net, task, cfg, rng, steps, 0, 0, adam,
      [&](Graph& g, const FlowBatch& b, Rng& r) {
        return TraceFmLoss(g, net, b, r, cfg.time_law);
      },
      TrainReport{});
}

}  // namespace c2f
