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
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "c2f/finite_diff.h"
#include "c2f/gaussian.h"
#include "test_util.h"

namespace c2f {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

DiagonalGaussian Scalar(double mean, double logvar) {
  return DiagonalGaussian(Tensor({1}, mean), Tensor({1}, logvar));
}

TEST(GaussianTest, FromParametersSplitsAndClamps) {
  auto g = DiagonalGaussian::FromParameters(Tensor::Vector({1.0, 0.0}));
  EXPECT_EQ(g.mean()[0], 1.0);
  EXPECT_EQ(g.logvar()[0], 0.0);
  EXPECT_EQ(DiagonalGaussian::FromParameters(Tensor::Vector({0.0, 25.0}))
                .logvar()[0],
            20.0);
  EXPECT_EQ(DiagonalGaussian::FromParameters(Tensor::Vector({0.0, -7.0}))
                .logvar()[0],
            -5.0);
  EXPECT_THROW(DiagonalGaussian::FromParameters(Tensor({2, 3})), ShapeError);
}

TEST(GaussianTest, ClampIsIdempotent) {
  Rng rng(3);
  const Tensor raw = RandomUniform({4, 6}, -30.0, 30.0, rng);
  const auto g = DiagonalGaussian::FromParameters(raw);
  const auto h = DiagonalGaussian::FromParameters(g.Parameters());
  EXPECT_EQ(g.logvar(), h.logvar());
  for (double v : g.logvar().values()) {
    EXPECT_GE(v, kLogVarMin);
    EXPECT_LE(v, kLogVarMax);
  }
}

TEST(GaussianTest, ModeIgnoresLogvar) {
  EXPECT_EQ(Scalar(0.3, 0.0).Mode()[0], 0.3);
  const Tensor mean = Tensor::Vector({-0.5, 0.2});
  DiagonalGaussian a(mean, Tensor::Vector({0.0, 0.0}));
  DiagonalGaussian b(mean, Tensor::Vector({1.0, 1.0}));
  EXPECT_EQ(a.Mode(), b.Mode());
  EXPECT_EQ(a.Mode(), mean);
}

TEST(GaussianTest, SampleIsReparameterized) {
  EXPECT_EQ(Scalar(0.0, 0.0).Sample(Tensor({1}, 1.0))[0], 1.0);
  EXPECT_DOUBLE_EQ(Scalar(2.0, std::log(4.0)).Sample(Tensor({1}, 0.5))[0],
                   3.0);
  EXPECT_THROW(Scalar(0.0, 0.0).Sample(Tensor({2})), ShapeError);
}

TEST(GaussianTest, SampleVarianceMatchesMonteCarlo) {
  Rng rng(42);
  const double logvar = 0.7;
  const auto g = Scalar(0.4, logvar);
  const Tensor noise = RandomNormal({1000000}, rng);
  DiagonalGaussian wide(Tensor({1000000}, 0.4), Tensor({1000000}, logvar));
  const Tensor s = wide.Sample(noise);
  const double mean = Mean(s);
  double var = 0.0;
  for (double v : s.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(s.size() - 1);
  EXPECT_NEAR(var / std::exp(logvar), 1.0, 0.01);
  EXPECT_EQ(g.Mode()[0], 0.4);
}

TEST(GaussianTest, KlClosedFormCases) {
  EXPECT_EQ(Scalar(0.3, 0.2).Kl(Scalar(0.3, 0.2))[0], 0.0);
  // Unit variance, shift 1 in one of D = 4 dims.
  DiagonalGaussian q(Tensor({1, 4}), Tensor({1, 4}));
  DiagonalGaussian p(Tensor({1, 4}, {1.0, 0.0, 0.0, 0.0}), Tensor({1, 4}));
  EXPECT_DOUBLE_EQ(q.Kl(p)[0], 0.5 / 4.0);
  EXPECT_NEAR(Scalar(0.3, 0.2).Kl(Scalar(0.1, -0.4))[0], 0.14090, 1e-5);
}

TEST(GaussianTest, KlNonnegativeAndZeroOnlyWhenEqual) {
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    const Tensor m1 = RandomNormal({3, 4}, rng);
    const Tensor l1 = RandomUniform({3, 4}, -3.0, 3.0, rng);
    const Tensor m2 = RandomNormal({3, 4}, rng);
    const Tensor l2 = RandomUniform({3, 4}, -3.0, 3.0, rng);
    const Tensor kl = DiagonalGaussian(m1, l1).Kl(DiagonalGaussian(m2, l2));
    for (double v : kl.values()) EXPECT_GT(v, 0.0);
    const Tensor self = DiagonalGaussian(m1, l1).Kl(DiagonalGaussian(m1, l1));
    for (double v : self.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(GaussianTest, NllClosedFormCases) {
  EXPECT_NEAR(Scalar(0.0, 0.0).Nll(Tensor({1}, 0.0))[0], 0.918939, 1e-6);
  EXPECT_DOUBLE_EQ(Scalar(0.0, 0.0).Nll(Tensor({1}, 1.0))[0],
                   kHalfLog2Pi + 0.5);
  EXPECT_THROW(Scalar(0.0, 0.0).Nll(Tensor({2})), ShapeError);
}

TEST(GaussianTest, NllMatchesDensityFormula) {
  Rng rng(4);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 20; ++k) {
    const double mu = normal(rng), lv = normal(rng), x = normal(rng);
    const double sigma = std::exp(0.5 * lv);
    const double density = std::exp(-0.5 * std::pow((x - mu) / sigma, 2)) /
                           (sigma * std::sqrt(2.0 * std::numbers::pi));
    EXPECT_NEAR(Scalar(mu, lv).Nll(Tensor({1}, x))[0], -std::log(density),
                1e-12);
  }
}

TEST(GaussianTest, PerRowReductionIsDimensionMean) {
  DiagonalGaussian q(Tensor({2, 2}, {0.0, 0.0, 1.0, 0.0}), Tensor({2, 2}));
  DiagonalGaussian p(Tensor({2, 2}), Tensor({2, 2}));
  const Tensor kl = q.Kl(p);
  ASSERT_EQ(kl.size(), 2u);
  EXPECT_EQ(kl[0], 0.0);
  EXPECT_DOUBLE_EQ(kl[1], 0.25);
}

TEST(GaussianTest, ReparameterizationGradient) {
  Rng rng(6);
  const Tensor raw = RandomNormal({2, 6}, rng);
  const Tensor noise = RandomNormal({2, 3}, rng);
  auto build = [&](Graph& g, const Tensor& r) {
    Var rv = g.Constant(r);
    const GaussianVar gv = TraceGaussian(g, rv);
    return std::pair{rv, g.Sum(TraceSample(g, gv, noise))};
  };
  Graph g;
  auto [rv, loss] = build(g, raw);
  g.Backward(loss);
  const Tensor& grad = g.grad(rv);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(grad.at(r, c), 1.0);
      EXPECT_NEAR(grad.at(r, 3 + c),
                  0.5 * std::exp(0.5 * raw.at(r, 3 + c)) * noise.at(r, c),
                  1e-14);
    }
  }
  auto f = [&](const Tensor& r) {
    Graph h;
    return h.scalar(build(h, r).second);
  };
  EXPECT_LT(MaxRelativeError(grad, FiniteDiffGradRelative(f, raw, 1e-6),
                             testing::kGradFloor),
            1e-5);
}

TEST(GaussianTest, TracedLossesMatchValueLevel) {
  Rng rng(10);
  const Tensor raw_q = RandomNormal({3, 8}, rng);
  const Tensor raw_p = RandomNormal({3, 8}, rng);
  const Tensor x = RandomNormal({3, 4}, rng);
  const auto q = DiagonalGaussian::FromParameters(raw_q);
  const auto p = DiagonalGaussian::FromParameters(raw_p);
  Graph g;
  const GaussianVar qv = TraceGaussian(g, g.Constant(raw_q));
  const GaussianVar pv = TraceGaussian(g, g.Constant(raw_p));
  EXPECT_NEAR(g.scalar(TraceKlMean(g, qv, pv)), Mean(q.Kl(p)), 1e-15);
  EXPECT_NEAR(g.scalar(TraceNllMean(g, qv, g.Constant(x))), Mean(q.Nll(x)),
              1e-15);
}

}  // namespace
}  // namespace c2f
