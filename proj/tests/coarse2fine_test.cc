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

#include <cmath>

#include <gtest/gtest.h>

#include "c2f/coarse2fine.h"
#include "c2f/tasks.h"
#include "test_util.h"

namespace c2f {
namespace {

using testing::DimsOf;
using testing::MaxGradientError;

constexpr double kSigma2 = 0.01235;

TEST(ScheduleTest, DefaultsAndValidation) {
  PhaseSchedule s;
  EXPECT_EQ(s.sigma2_noise, 0.01235);
  EXPECT_EQ(s.gamma, 0.01);
  EXPECT_EQ(s.lambda_1, 0.1);
  EXPECT_EQ(s.lambda_2, 0.1);
  EXPECT_EQ(s.t_f, 0.1);
  EXPECT_EQ(s.t1, 1.0);
  EXPECT_EQ(s.coarse_start, CoarseStart::kZeros);
  EXPECT_EQ(s.coarse_output, CoarseOutput::kSample);
  EXPECT_EQ(s.infer_coarse_output, CoarseOutput::kMode);
  EXPECT_NO_THROW(s.Validate());
  s.t_f = 1.5;
  EXPECT_THROW(s.Validate(), std::invalid_argument);
  s = PhaseSchedule{};
  s.fine_x_scale = 0.0;
  EXPECT_THROW(s.Validate(), std::invalid_argument);
  s = PhaseSchedule{};
  s.sigma2_noise = 0.0;
  EXPECT_THROW(s.Validate(), std::invalid_argument);
  s = PhaseSchedule{};
  s.UseWarmupInference();
  EXPECT_DOUBLE_EQ(s.fine_x_scale, 0.9);
  EXPECT_DOUBLE_EQ(s.fine_dt_scale, 0.1);
  s.UseJointInference();
  EXPECT_EQ(s.fine_x_scale, 1.0);
}

TEST(CoarseTargetsTest, Examples) {
  const Tensor a = Tensor::Vector({0.5, -0.2});
  const CoarseTargets t = MakeCoarseTargets(a, Tensor({2}), kSigma2);
  EXPECT_EQ(t.u, Tensor::Vector({-0.5, 0.2}));
  EXPECT_EQ(MakeCoarseTargets(a, a, kSigma2).u, Tensor({2}));
  for (double v : t.target.logvar().values()) {
    EXPECT_EQ(v, std::log(kSigma2));
    // ln(0.01235) = -4.39410, so the rounded reference needs 2e-4 slack.
    EXPECT_NEAR(v, -4.3942, 2e-4);
  }
  EXPECT_THROW(MakeCoarseTargets(a, Tensor({3}), kSigma2), ShapeError);
}

TEST(Phase1CoarseLossTest, Examples) {
  const Tensor u = Tensor::Vector({0.3, -0.1, 0.7});
  const double lv = std::log(kSigma2);
  const DiagonalGaussian exact(u, Tensor({3}, lv));
  EXPECT_EQ(Phase1CoarseLoss(exact, u, kSigma2, 0.01), 0.0);
  Tensor shifted = u;
  for (double& v : shifted.values()) v += 0.1;
  EXPECT_NEAR(Phase1CoarseLoss(DiagonalGaussian(shifted, Tensor({3}, lv)), u,
                               kSigma2, 0.01),
              0.01, 1e-15);
  EXPECT_NEAR(Phase1CoarseLoss(DiagonalGaussian(u, Tensor({3}, lv + 1.0)), u,
                               kSigma2, 0.01),
              0.01, 1e-15);
}

TEST(Phase2CoarseLossTest, Examples) {
  const Tensor u = Tensor({2, 2}, {0.3, -0.1, 0.7, 0.0});
  const double lv = std::log(kSigma2);
  const DiagonalGaussian exact(u, Tensor({2, 2}, lv));
  EXPECT_EQ(Phase2CoarseLoss(exact, u, kSigma2, CoarseLoss::kKl), 0.0);
  Tensor off = u;
  for (double& v : off.values()) v += std::sqrt(kSigma2);
  EXPECT_NEAR(Phase2CoarseLoss(DiagonalGaussian(off, Tensor({2, 2}, lv)), u,
                               kSigma2, CoarseLoss::kKl),
              0.5, 1e-12);
  const double l = -1.3;
  EXPECT_NEAR(Phase2CoarseLoss(DiagonalGaussian(Tensor({1}, 0.2),
                                                Tensor({1}, l)),
                               Tensor({1}, 0.2), kSigma2, CoarseLoss::kNll),
              0.5 * (std::log(2.0 * M_PI) + l), 1e-15);
  EXPECT_THROW(Phase2CoarseLoss(exact, u, kSigma2, CoarseLoss::kMseLogvar),
               std::invalid_argument);
}

TEST(Phase2CoarseLossTest, KlZeroIffPosteriorEqualsTarget) {
  Rng rng(5);
  const Tensor u = RandomNormal({3, 4}, rng);
  const double lv = std::log(kSigma2);
  for (std::size_t i = 0; i < u.size(); ++i) {
    Tensor mean = u, logvar(u.shape(), lv);
    mean[i] += 1e-3;
    EXPECT_GT(Phase2CoarseLoss(DiagonalGaussian(mean, logvar), u, kSigma2,
                               CoarseLoss::kKl),
              0.0);
    mean = u;
    logvar[i] += 1e-3;
    EXPECT_GT(Phase2CoarseLoss(DiagonalGaussian(mean, logvar), u, kSigma2,
                               CoarseLoss::kKl),
              0.0);
  }
}

TEST(ApInitTest, Examples) {
  const Tensor a = Tensor::Vector({0.4, -0.9});
  const Tensor zero({2});
  EXPECT_EQ(ApInit(zero, zero - a), a);
  const Tensor eps = Tensor::Vector({1.5, 0.25});
  const Tensor back = ApInit(eps, eps - a);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(back[i], a[i], 1e-15);
  EXPECT_EQ(ApInit(eps, zero), eps);
  EXPECT_THROW(ApInit(eps, Tensor({3})), ShapeError);
}

class Fixture : public ::testing::Test {
 protected:
  Fixture()
      : task_(MakeMixtureTask(MixtureParams{})),
        oracle_(MakeOracle(task_, 2, kSigma2)) {}

  TaskSpec task_;
  OracleDenoiser oracle_;
};

TEST_F(Fixture, ProxyAndFineLossExamples) {
  Rng rng(1);
  const FlowBatch batch = SampleBatch(task_, 16, rng);
  // Oracle targets the mode-2 chunk; replace the batch actions with it.
  Tensor a = batch.actions;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const Tensor& chunk = oracle_.Lookup(batch.contexts.row(i));
    std::copy(chunk.values().begin(), chunk.values().end(), a.row(i).begin());
  }
  const Tensor eps = RandomNormal(a.shape(), rng);
  EXPECT_LT(Phase1ProxyLoss(oracle_, batch.contexts, a, eps, 0.1), 1e-24);

  const OracleDenoiser disp =
      MakeOracle(task_, 2, kSigma2, OracleDenoiser::Field::kDisplacement);
  EXPECT_EQ(Phase2FineLoss(disp, batch.contexts, a, eps, 0.1), 0.0);

  // Net predicting 0 with eps_tilde = a + eta gives the mean of eta^2.
  Rng zr(0);
  Mlp zero(DimsOf(task_), {4}, zr);
  for (Tensor* p : zero.parameters()) p->Fill(0.0);
  const Tensor eta = RandomNormal(a.shape(), rng);
  EXPECT_NEAR(Phase2FineLoss(zero, batch.contexts, a, a + eta, 0.1),
              Mean(eta * eta), 1e-15);
  EXPECT_EQ(Phase1ProxyLoss(zero, batch.contexts, a, a, 0.1), 0.0);
}

TEST_F(Fixture, OracleTotalsAreZero) {
  Rng rng(3);
  FlowBatch batch = SampleBatch(task_, 32, rng);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor& chunk = oracle_.Lookup(batch.contexts.row(i));
    std::copy(chunk.values().begin(), chunk.values().end(),
              batch.actions.row(i).begin());
  }
  PhaseSchedule s;
  s.coarse_output = CoarseOutput::kMode;
  const LossTerms p1 = EvaluateTerms(
      [&](Graph& g) { return TracePhase1Total(g, oracle_, batch, s, rng); });
  EXPECT_LT(std::abs(p1.total), 1e-24);
  const LossTerms p2 = EvaluateTerms(
      [&](Graph& g) { return TracePhase2Total(g, oracle_, batch, s, rng); });
  EXPECT_LT(std::abs(p2.total), 1e-24);
}

TEST_F(Fixture, TotalsDecomposeExactly) {
  Rng rng(4);
  Mlp net(DimsOf(task_), {16, 16}, rng);
  const FlowBatch batch = SampleBatch(task_, 8, rng);
  PhaseSchedule s;
  s.alpha = 0.7;
  s.lambda_1 = 0.3;
  s.lambda_2 = 0.2;
  const LossTerms p1 = EvaluateTerms(
      [&](Graph& g) { return TracePhase1Total(g, net, batch, s, rng); });
  EXPECT_EQ(p1.total, s.alpha * p1.fine + s.lambda_1 * p1.coarse);
  const LossTerms p2 = EvaluateTerms(
      [&](Graph& g) { return TracePhase2Total(g, net, batch, s, rng); });
  EXPECT_EQ(p2.total, p2.fine + s.lambda_2 * p2.coarse);

  s.lambda_1 = 0.0;
  s.lambda_2 = 0.0;
  s.alpha = 1.0;
  const LossTerms q1 = EvaluateTerms(
      [&](Graph& g) { return TracePhase1Total(g, net, batch, s, rng); });
  EXPECT_EQ(q1.total, q1.fine);
  const LossTerms q2 = EvaluateTerms(
      [&](Graph& g) { return TracePhase2Total(g, net, batch, s, rng); });
  EXPECT_EQ(q2.total, q2.fine);
}

TEST_F(Fixture, Phase1DefaultRegressionFixture) {
  Rng rng(2026);
  Mlp net(DimsOf(task_), {32, 32}, rng);
  const FlowBatch batch = SampleBatch(task_, 16, rng);
  const PhaseSchedule s;
  const LossTerms t = EvaluateTerms(
      [&](Graph& g) { return TracePhase1Total(g, net, batch, s, rng); });
  EXPECT_TRUE(std::isfinite(t.total));
  EXPECT_GT(t.total, 0.0);
  // Frozen from this implementation.
  EXPECT_DOUBLE_EQ(t.total, 1.3725991720485606);
}

TEST_F(Fixture, KlNllSwitchOnlyChangesCoarseTerm) {
  Rng init(7);
  Mlp net(DimsOf(task_), {16}, init);
  Rng br(8);
  const FlowBatch batch = SampleBatch(task_, 8, br);
  PhaseSchedule kl, nll;
  nll.coarse_loss_type = CoarseLoss::kNll;
  Rng r1(9), r2(9);
  const LossTerms a = EvaluateTerms(
      [&](Graph& g) { return TracePhase2Total(g, net, batch, kl, r1); });
  const LossTerms b = EvaluateTerms(
      [&](Graph& g) { return TracePhase2Total(g, net, batch, nll, r2); });
  EXPECT_EQ(a.fine, b.fine);
  EXPECT_NE(a.coarse, b.coarse);
}

TEST_F(Fixture, GradientsMatchFiniteDifferences) {
  Rng rng(10);
  Mlp net(DimsOf(task_), {12, 12}, rng);
  const FlowBatch batch = SampleBatch(task_, 6, rng);
  PhaseSchedule s;
  s.coarse_start = CoarseStart::kGaussian;
  auto p1 = [&](Graph& g, Rng& r) {
    return TracePhase1Total(g, net, batch, s, r);
  };
  EXPECT_LT(MaxGradientError(net, p1, 1), 1e-5);
  for (CoarseLoss type : {CoarseLoss::kKl, CoarseLoss::kNll}) {
    s.coarse_loss_type = type;
    auto p2 = [&](Graph& g, Rng& r) {
      return TracePhase2Total(g, net, batch, s, r);
    };
    EXPECT_LT(MaxGradientError(net, p2, 2), 1e-5) << CoarseLossName(type);
  }
  s.noisy_actions = true;
  s.flow_num = 2;
  s.times_list_train = {0.1, 0.3};
  auto p3 = [&](Graph& g, Rng& r) {
    return TracePhase2Total(g, net, batch, s, r);
  };
  EXPECT_LT(MaxGradientError(net, p3, 3), 1e-5);
}

// The sampled coarse path is the only route from the fine loss back into
// the coarse head output; check that route in isolation.
TEST_F(Fixture, FineLossGradientFlowsThroughSample) {
  Rng rng(11);
  Mlp net(DimsOf(task_), {8}, rng);
  const FlowBatch batch = SampleBatch(task_, 4, rng);
  PhaseSchedule s;
  s.lambda_2 = 0.0;
  auto loss = [&](Graph& g, Rng& r) {
    return TracePhase2Total(g, net, batch, s, r);
  };
  EXPECT_LT(MaxGradientError(net, loss, 4), 1e-5);
}

TEST_F(Fixture, TwoStepOracleRecoversExactly) {
  const Tensor contexts = task_.ContextGrid(2);
  const OracleDenoiser disp =
      MakeOracle(task_, 2, kSigma2, OracleDenoiser::Field::kDisplacement);
  struct Case {
    double x_scale, dt_scale;
    const OracleDenoiser* net;
  };
  const Case cases[] = {{0.9, 0.1, &oracle_},
                        {1.0, 0.1, &oracle_},
                        {1.0, 1.0, &oracle_},
                        {1.0, 0.1, &disp},
                        {1.0, 1.0, &disp}};
  for (const Case& c : cases) {
    PhaseSchedule s;
    s.fine_x_scale = c.x_scale;
    s.fine_dt_scale = c.dt_scale;
    Rng rng(0);
    CountingDenoiser counter(*c.net);
    const SampleResult r = TwoStepSample(counter, contexts, s, rng);
    EXPECT_EQ(r.nfe, 2);
    EXPECT_EQ(counter.forward_calls(), 2);
    ASSERT_EQ(r.stage_ms.size(), 2u);
    for (std::size_t i = 0; i < contexts.rows(); ++i) {
      const Tensor& a = oracle_.Lookup(contexts.row(i));
      for (std::size_t j = 0; j < a.size(); ++j) {
        EXPECT_NEAR(r.actions.at(i, j), a[j], 1e-12)
            << c.x_scale << " " << c.dt_scale;
      }
    }
  }
}

TEST_F(Fixture, VarianceFloorWithoutRefinement) {
  PhaseSchedule s;
  s.infer_coarse_output = CoarseOutput::kSample;
  s.refine = false;
  const std::size_t n = 100000;
  Tensor contexts = Tensor::Matrix(n, task_.context_dim());
  for (std::size_t i = 0; i < n; ++i) contexts.at(i, i % 4) = 1.0;
  Rng rng(21);
  const SampleResult r = TwoStepSample(oracle_, contexts, s, rng);
  EXPECT_EQ(r.nfe, 1);
  double se = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& a = oracle_.Lookup(contexts.row(i));
    for (std::size_t j = 0; j < a.size(); ++j) {
      se += std::pow(r.actions.at(i, j) - a[j], 2);
    }
  }
  const double expected = 8 * kSigma2;
  EXPECT_NEAR(se / n, expected, 0.1 * expected);
}

TEST_F(Fixture, OracleRejectsUnknownContext) {
  EXPECT_THROW(oracle_.Lookup(Tensor::Vector({0.5, 0.5, 0, 0}).values()),
               std::out_of_range);
  OracleDenoiser o(DimsOf(task_), kSigma2);
  EXPECT_THROW(o.Forward(task_.ContextGrid(1), Tensor::Matrix(4, 8),
                         TimeColumn(4, 0.5)),
               std::out_of_range);
}

TEST(TrainTest, DeterministicAndPhaseBoundary) {
  const TaskSpec task = MakeMixtureTask(MixtureParams{});
  PhaseSchedule s;
  s.phase1_steps = 5;
  s.phase2_steps = 4;
  TrainConfig cfg;
  cfg.hidden = {8};
  auto run = [&] {
    Rng init(1), train(2);
    Mlp net(DimsOf(task), cfg.hidden, init);
    TrainReport r = TrainCoarseToFine(net, task, s, cfg, train);
    return std::pair{r, net.layers()[0].weight};
  };
  const auto [r1, w1] = run();
  const auto [r2, w2] = run();
  ASSERT_EQ(r1.steps.size(), r2.steps.size());
  for (std::size_t i = 0; i < r1.steps.size(); ++i) {
    EXPECT_EQ(r1.steps[i].terms.total, r2.steps[i].terms.total);
  }
  EXPECT_EQ(w1, w2);
  ASSERT_EQ(r1.steps.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(r1.steps[i].phase, i < 5 ? 1 : 2);
    EXPECT_EQ(r1.steps[i].step, i);
  }
}

TEST(TrainTest, PhaseOnlyRuns) {
  const TaskSpec task = MakeMixtureTask(MixtureParams{});
  TrainConfig cfg;
  cfg.hidden = {8};
  PhaseSchedule s;
  s.phase1_steps = 0;
  s.phase2_steps = 3;
  Rng init(1), train(2);
  Mlp net(DimsOf(task), cfg.hidden, init);
  for (const StepRecord& r : TrainCoarseToFine(net, task, s, cfg, train).steps) {
    EXPECT_EQ(r.phase, 2);
  }
  s.phase1_steps = 3;
  s.phase2_steps = 0;
  for (const StepRecord& r : TrainCoarseToFine(net, task, s, cfg, train).steps) {
    EXPECT_EQ(r.phase, 1);
  }
}

TEST(TrainTest, DivergenceGuard) {
  const TaskSpec task = MakeMixtureTask(MixtureParams{});
  TrainConfig cfg;
  cfg.hidden = {8};
  cfg.learning_rate = 1e300;
  PhaseSchedule s;
  s.phase1_steps = 50;
  s.phase2_steps = 0;
  Rng init(1), train(2);
  Mlp net(DimsOf(task), cfg.hidden, init);
  EXPECT_THROW(TrainCoarseToFine(net, task, s, cfg, train), DivergenceError);
}

TEST(TrainTest, TrainingReducesLoss) {
  const TaskSpec task = MakeMixtureTask(MixtureParams{});
  TrainConfig cfg;
  PhaseSchedule s;
  s.phase1_steps = 300;
  s.phase2_steps = 0;
  Rng init(1), train(2);
  Mlp net(DimsOf(task), cfg.hidden, init);
  const TrainReport r = TrainCoarseToFine(net, task, s, cfg, train);
  auto avg = [&](std::size_t from) {
    double v = 0.0;
    for (std::size_t i = from; i < from + 20; ++i) v += r.steps[i].terms.total;
    return v / 20.0;
  };
  EXPECT_LT(avg(280), 0.8 * avg(0));
}

}  // namespace
}  // namespace c2f
