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

#ifndef C2F_COARSE2FINE_H_
#define C2F_COARSE2FINE_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "c2f/autodiff.h"
#include "c2f/flow.h"
#include "c2f/gaussian.h"
#include "c2f/mlp.h"
#include "c2f/tasks.h"
#include "c2f/tensor.h"

namespace c2f {

// State fed to the coarse pass: all zeros, or fresh N(0, I) endpoint noise.
enum class CoarseStart { kZeros, kGaussian };
// How the coarse posterior becomes a velocity: its mean or a
// reparameterized draw.
enum class CoarseOutput { kMode, kSample };
// kMseLogvar is the warm-up objective; kKl and kNll are the joint-phase
// choices.
enum class CoarseLoss { kMseLogvar, kKl, kNll };

const char* CoarseStartName(CoarseStart v);
const char* CoarseOutputName(CoarseOutput v);
const char* CoarseLossName(CoarseLoss v);
CoarseStart ParseCoarseStart(const std::string& s);
CoarseOutput ParseCoarseOutput(const std::string& s);
CoarseLoss ParseCoarseLoss(const std::string& s);

// Every hyperparameter and path switch of the two-phase trainer and the
// two-step sampler.
struct PhaseSchedule {
  double sigma2_noise = 0.01235;  // shared coarse target variance
  double gamma = 0.01;            // warm-up log-variance matching weight
  double lambda_1 = 0.1;          // warm-up coarse weight
  double lambda_2 = 0.1;          // joint-phase coarse weight
  double alpha = 1.0;             // warm-up proxy weight
  double t_f = 0.1;               // refinement time
  double t1 = 1.0;                // coarse terminal time

  CoarseStart coarse_start = CoarseStart::kZeros;
  CoarseOutput coarse_output = CoarseOutput::kSample;        // training
  CoarseOutput infer_coarse_output = CoarseOutput::kMode;    // sampling
  CoarseLoss coarse_loss_type = CoarseLoss::kKl;             // joint phase

  // Fine step at inference: x <- fine_x_scale * eps_tilde, then
  // x - fine_dt_scale * v(x, t_f).
  double fine_dt_scale = 0.1;
  double fine_x_scale = 1.0;

  // Off: sample with the coarse stage only (one evaluation).
  bool refine = true;
  // Off: the log-variance head is ignored and pinned to log(sigma2_noise).
  bool learn_variance = true;
  // On: the fine input is (1 - t_f) * eps_tilde + t_f * eta with fresh
  // eta ~ N(0, I), in training and at inference; the target stays
  // eps_tilde - a.
  bool noisy_actions = false;
  // Fine passes per optimization step, each with its own posterior draw;
  // their losses are averaged.
  int flow_num = 1;
  // Candidate fine times drawn per row during training; empty means {t_f}.
  std::vector<double> times_list_train;

  std::size_t phase1_steps = 1500;
  std::size_t phase2_steps = 1500;

  double target_logvar() const;
  void Validate() const;

  // Fine-step scaling of the warm-up sampling path: x scaled by 1 - t_f,
  // step scaled by t_f.
  void UseWarmupInference();
  // Fine-step scaling of the joint-phase sampling path: x unscaled, step
  // scaled by t_f.
  void UseJointInference();

  bool operator==(const PhaseSchedule&) const = default;
};

struct CoarseTargets {
  Tensor u;                 // eps1 - a
  DiagonalGaussian target;  // N(u, sigma2_noise I)
};

CoarseTargets MakeCoarseTargets(const Tensor& actions, const Tensor& eps1,
                                double sigma2_noise);

// Per-dimension mean of (u - mu)^2 + gamma * (log sigma2_noise - logvar)^2.
double Phase1CoarseLoss(const DiagonalGaussian& posterior, const Tensor& u,
                        double sigma2_noise, double gamma);
// Batch mean of KL(posterior || N(u, sigma2_noise)) or of NLL(u).
double Phase2CoarseLoss(const DiagonalGaussian& posterior, const Tensor& u,
                        double sigma2_noise, CoarseLoss type);
// eps1 - u_hat
Tensor ApInit(const Tensor& eps1, const Tensor& u_hat);

Var TracePhase1CoarseLoss(Graph& graph, const GaussianVar& posterior,
                          const Tensor& u, double sigma2_noise, double gamma);
Var TracePhase2CoarseLoss(Graph& graph, const GaussianVar& posterior,
                          const Tensor& u, double sigma2_noise,
                          CoarseLoss type);

// Fine regression on the interpolated proxy input x = t*eps + (1 - t)*a.
// `t` is a [B x 1] column.
Var TracePhase1ProxyLoss(Graph& graph, const Denoiser& net,
                         const Tensor& contexts, const Tensor& actions,
                         const Tensor& eps, const Tensor& t);
double Phase1ProxyLoss(const Denoiser& net, const Tensor& contexts,
                       const Tensor& actions, const Tensor& eps, double t_f);

// Fine regression of mean(net(c, x, t)) onto eps_tilde - a. `x` is the fine
// input (eps_tilde itself unless noisy_actions). Gradients reach the coarse
// posterior through both handles.
Var TracePhase2FineLoss(Graph& graph, const Denoiser& net,
                        const Tensor& contexts, const Tensor& actions,
                        Var eps_tilde, Var x, const Tensor& t);
double Phase2FineLoss(const Denoiser& net, const Tensor& contexts,
                      const Tensor& actions, const Tensor& eps_tilde,
                      double t_f);

// Coarse posterior from raw network output, honoring learn_variance.
GaussianVar TracePosterior(Graph& graph, Var raw, const PhaseSchedule& s);
DiagonalGaussian PosteriorFromRaw(const Tensor& raw, const PhaseSchedule& s);

// Warm-up objective: alpha * proxy + lambda_1 * coarse. Trace.fine holds the
// proxy term.
LossTrace TracePhase1Total(Graph& graph, const Denoiser& net,
                           const FlowBatch& batch, const PhaseSchedule& s,
                           Rng& rng);
// Joint objective: fine + lambda_2 * coarse.
LossTrace TracePhase2Total(Graph& graph, const Denoiser& net,
                           const FlowBatch& batch, const PhaseSchedule& s,
                           Rng& rng);

// Coarse pass at t1 then one fine step at t_f. stage_ms holds
// {coarse, fine} (only {coarse} without refinement).
SampleResult TwoStepSample(const Denoiser& net, const Tensor& contexts,
                           const PhaseSchedule& s, Rng& rng);

// Analytic stand-in for a trained network on a finite context set. Its
// mean head is the single-point velocity toward the looked-up chunk and its
// log-variance head is log(sigma2_noise).
class OracleDenoiser : public Denoiser {
 public:
  enum class Field {
    kMarginal,      // (x - a) / t: exact for Euler and the warm-up proxy
    kDisplacement,  // x - a: the joint-phase fine target
  };

  OracleDenoiser(ModelDims dims, double sigma2_noise,
                 Field field = Field::kMarginal);

  void Add(Tensor context, const ActionChunk& chunk);
  const Tensor& Lookup(std::span<const double> context) const;

  ModelDims dims() const override { return dims_; }
  Tensor Forward(const Tensor& contexts, const Tensor& x,
                 const Tensor& t) const override;
  Var Trace(Graph& graph, Var contexts, Var x, Var t) const override;

 private:
  Tensor Targets(const Tensor& contexts) const;
  Tensor Scales(const Tensor& t) const;

  ModelDims dims_;
  double logvar_;
  Field field_;
  std::vector<std::pair<Tensor, Tensor>> table_;  // context -> flat chunk
};

// Oracle over every context of `task`, each mapped to the mean of `mode`.
OracleDenoiser MakeOracle(const TaskSpec& task, std::size_t mode,
                          double sigma2_noise,
                          OracleDenoiser::Field field =
                              OracleDenoiser::Field::kMarginal);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {64, 64};
  TimeLaw time_law = TimeLaw::kUniform;  // flow-matching baseline only

  bool operator==(const TrainConfig&) const = default;
};

struct StepRecord {
  int phase = 0;  // 1 warm-up, 2 joint, 0 flow matching
  std::size_t step = 0;
  LossTerms terms;

  bool operator==(const StepRecord&) const = default;
};

struct TrainReport {
  std::vector<StepRecord> steps;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Warm-up for phase1_steps Adam updates, then the joint objective for
// phase2_steps. Throws DivergenceError on a non-finite loss.
TrainReport TrainCoarseToFine(Mlp& net, const TaskSpec& task,
                              const PhaseSchedule& s, const TrainConfig& cfg,
                              Rng& rng);
// Flow-matching baseline on the same architecture and optimizer.
TrainReport TrainFlowMatching(Mlp& net, const TaskSpec& task,
                              std::size_t steps, const TrainConfig& cfg,
                              Rng& rng);

}  // namespace c2f

#endif  // C2F_COARSE2FINE_H_
