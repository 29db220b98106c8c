// Copyright 2026 The dynmf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dynmf/adam.hpp"

namespace dynmf {
namespace {

using Eigen::VectorXd;

// Scalar Adam written out from the update rule, used as the reference.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double theta, double g, const AdamHyper& h) {
    ++t;
    m = h.beta1 * m + (1 - h.beta1) * g;
    v = h.beta2 * v + (1 - h.beta2) * g * g;
    const double m_hat = m / (1 - std::pow(h.beta1, t));
    const double v_hat = v / (1 - std::pow(h.beta2, t));
    return theta - h.alpha * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
};

TEST(AdamStep, FirstStepUnitGradient) {
  AdamState state(1, {});
  VectorXd theta = VectorXd::Zero(1);
  adam_step(state, theta, VectorXd::Ones(1));
  EXPECT_LT(std::abs(theta[0] + 0.001), 1e-8);
  EXPECT_LT(std::abs(std::abs(theta[0]) - 0.001), 1e-6);
  EXPECT_EQ(state.step_count, 1);
}

TEST(AdamStep, ZeroGradientLeavesParameters) {
  AdamState state(4, {});
  VectorXd theta(4);
  theta << 1, -2, 3, 0.5;
  const VectorXd before = theta;
  adam_step(state, theta, VectorXd::Zero(4));
  EXPECT_EQ(theta, before);
}

TEST(AdamStep, QuadraticConverges) {
  AdamState state(1, {});
  VectorXd theta = VectorXd::Zero(1);
  for (int i = 0; i < 10000; ++i) {
    VectorXd g(1);
    g[0] = 2.0 * (theta[0] - 3.0);
    adam_step(state, theta, g);
  }
  EXPECT_LT(std::abs(theta[0] - 3.0), 0.01);
}

TEST(AdamStep, MatchesScalarReference) {
  AdamHyper h;
  h.alpha = 0.01;
  h.beta1 = 0.8;
  AdamState state(1, h);
  ScalarAdam ref;
  VectorXd theta = VectorXd::Constant(1, 1.5);
  double expected = 1.5;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double g = normal(rng);
    adam_step(state, theta, VectorXd::Constant(1, g));
    expected = ref.step(expected, g, h);
    ASSERT_NEAR(theta[0], expected, 1e-15 * std::max(1.0, std::abs(expected)));
  }
}

// Property: first step from zero moments moves against the gradient sign by at
// most alpha (plus a tiny epsilon-driven slack).
TEST(AdamStep, PropertyFirstStepSignAndBound) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(-6.0, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index size = 1 + trial % 7;
    VectorXd theta(size), grad(size);
    for (Eigen::Index i = 0; i < size; ++i) {
      theta[i] = normal(rng);
      grad[i] = normal(rng) * std::pow(10.0, log_scale(rng));
    }
    const VectorXd before = theta;
    AdamState state(size, {});
    adam_step(state, theta, grad);
    for (Eigen::Index i = 0; i < size; ++i) {
      const double delta = theta[i] - before[i];
      EXPECT_LT(delta * grad[i], 0.0);
      EXPECT_LE(std::abs(delta), 0.001 * (1.0 + 1e-6) + 1e-15);
    }
  }
}

// Property: later steps stay bounded by alpha times the bias-correction ratio.
TEST(AdamStep, PropertyStepBoundedLater) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  AdamHyper h;
  AdamState state(5, h);
  VectorXd theta = VectorXd::Zero(5);
  for (int step = 1; step <= 500; ++step) {
    VectorXd grad(5);
    for (auto& g : grad) g = normal(rng);
    const VectorXd before = theta;
    adam_step(state, theta, grad);
    const double c1 = 1 - std::pow(h.beta1, step);
    const double c2 = 1 - std::pow(h.beta2, step);
    // Cauchy-Schwarz on the two moving averages, with gamma = beta1^2 / beta2 < 1.
    const double gamma = h.beta1 * h.beta1 / h.beta2;
    const double bound = h.alpha * (1 - h.beta1) / std::sqrt((1 - h.beta2) * (1 - gamma)) *
                         std::sqrt(c2) / c1;
    EXPECT_LE((theta - before).cwiseAbs().maxCoeff(), bound * (1 + 1e-12));
  }
}

TEST(AdamStep, Deterministic) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd theta(8), grad(8);
  for (auto& x : theta) x = normal(rng);
  for (auto& x : grad) x = normal(rng);
  AdamState a(8, {}), b(8, {});
  VectorXd ta = theta, tb = theta;
  for (int i = 0; i < 10; ++i) {
    adam_step(a, ta, grad);
    adam_step(b, tb, grad);
  }
  EXPECT_EQ(ta, tb);
  EXPECT_EQ(a.first_moment, b.first_moment);
  EXPECT_EQ(a.second_moment, b.second_moment);
}

TEST(AdamStep, SecondMomentNonNegative) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 10.0);
  AdamState state(6, {});
  VectorXd theta = VectorXd::Zero(6);
  for (int i = 0; i < 100; ++i) {
    VectorXd grad(6);
    for (auto& g : grad) g = normal(rng);
    adam_step(state, theta, grad);
    EXPECT_GE(state.second_moment.minCoeff(), 0.0);
  }
}

TEST(AdamStep, Errors) {
  AdamState state(3, {});
  VectorXd theta = VectorXd::Zero(3);
  EXPECT_THROW(adam_step(state, theta, VectorXd::Zero(2)), std::invalid_argument);
  VectorXd bad = VectorXd::Zero(3);
  bad[1] = std::nan("");
  EXPECT_THROW(adam_step(state, theta, bad), std::domain_error);
  bad[1] = INFINITY;
  EXPECT_THROW(adam_step(state, theta, bad), std::domain_error);
  EXPECT_EQ(state.step_count, 0);
  EXPECT_EQ(state.first_moment, VectorXd::Zero(3));
}

TEST(AdamHyper, Validation) {
  AdamHyper h;
  EXPECT_NO_THROW(h.validate());
  h.beta1 = 1.0;
  EXPECT_THROW(h.validate(), std::invalid_argument);
  h = {};
  h.beta2 = -0.1;
  EXPECT_THROW(h.validate(), std::invalid_argument);
  h = {};
  h.alpha = 0.0;
  EXPECT_THROW(h.validate(), std::invalid_argument);
  h = {};
  h.epsilon = 0.0;
  EXPECT_THROW(h.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace dynmf
