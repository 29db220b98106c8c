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
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "dynmf/error.hpp"
#include "dynmf/factor_model.hpp"
#include "dynmf/model_io.hpp"
#include "test_util.hpp"

namespace dynmf {
namespace {

using testing::random_cube;
using testing::random_model;

// Plain triple loop, no Eigen expressions.
double cell_oracle(const LatentModel& model, Index n, Index m, Index t) {
  double sum = 0.0;
  for (Index k = 0; k < model.rank(); ++k) {
    sum += model.factors.static_nodes()(n, k) * model.factors.dynamic_nodes(t)(n, k) *
           model.factors.metrics()(m, k);
  }
  return sum;
}

double objective_oracle(const LatentModel& model, const UsageCube& cube) {
  double sum = 0.0;
  for (Index t = 0; t < cube.num_times(); ++t) {
    for (Index n = 0; n < cube.num_nodes(); ++n) {
      for (Index m = 0; m < cube.num_metrics(); ++m) {
        if (!cube.observed(n, m, t)) continue;
        const double r = cube.values[t](n, m) - cell_oracle(model, n, m, t);
        sum += r * r;
      }
    }
  }
  return sum;
}

UsageCube cube_from_model(const LatentModel& model) {
  UsageCube cube;
  cube.node_ids = model.node_ids;
  cube.metric_ids = model.metric_ids;
  cube.timestamps = model.timestamps;
  for (Index t = 0; t < model.shape().times; ++t) cube.values.push_back(reconstruct_slice(model, t));
  return cube;
}

LatentModel one_by_one(double u, double uhat, double v) {
  UsageCube cube = random_cube(1, 1, 1, 0);
  LatentModel model = LatentModel::for_cube(cube, 1);
  model.factors.static_nodes()(0, 0) = u;
  model.factors.dynamic_nodes(0)(0, 0) = uhat;
  model.factors.metrics()(0, 0) = v;
  return model;
}

TEST(ReconstructCell, ScalarProduct) {
  EXPECT_EQ(reconstruct_cell(one_by_one(2, 3, 4), 0, 0, 0), 24.0);
}

TEST(ReconstructCell, ZeroDynamicVectorAnnihilates) {
  UsageCube cube = random_cube(3, 4, 2, 1);
  LatentModel model = random_model(cube, 3, 2);
  model.factors.dynamic_nodes(1).row(2).setZero();
  for (Index m = 0; m < 4; ++m) EXPECT_EQ(reconstruct_cell(model, 2, m, 1), 0.0);
}

TEST(ReconstructCell, IdentityNodeFactors) {
  UsageCube cube = random_cube(1, 1, 1, 0);
  LatentModel model = LatentModel::for_cube(cube, 2);
  model.factors.static_nodes() << 1, 1;
  model.factors.dynamic_nodes(0) << 1, 1;
  model.factors.metrics() << 0.5, -0.25;
  EXPECT_EQ(reconstruct_cell(model, 0, 0, 0), 0.25);
}

TEST(ReconstructCell, OutOfRange) {
  UsageCube cube = random_cube(2, 2, 2, 0);
  LatentModel model = random_model(cube, 2, 1);
  EXPECT_THROW(reconstruct_cell(model, 2, 0, 0), DimensionError);
  EXPECT_THROW(reconstruct_cell(model, 0, -1, 0), DimensionError);
  EXPECT_THROW(reconstruct_slice(model, 2), DimensionError);
}

TEST(ReconstructSlice, SingleCell) {
  const Matrix slice = reconstruct_slice(one_by_one(2, 3, 4), 0);
  ASSERT_EQ(slice.rows(), 1);
  ASSERT_EQ(slice.cols(), 1);
  EXPECT_EQ(slice(0, 0), 24.0);
}

TEST(ReconstructSlice, MatchesCellLoop) {
  UsageCube cube = random_cube(3, 4, 2, 3);
  LatentModel model = random_model(cube, 2, 4);
  for (Index t = 0; t < 2; ++t) {
    const Matrix slice = reconstruct_slice(model, t);
    for (Index n = 0; n < 3; ++n) {
      for (Index m = 0; m < 4; ++m) {
        EXPECT_NEAR(slice(n, m), cell_oracle(model, n, m, t), 1e-14);
        EXPECT_NEAR(reconstruct_cell(model, n, m, t), cell_oracle(model, n, m, t), 1e-14);
      }
    }
  }
}

TEST(ReconstructSlice, AllOnesDynamicGivesStaticProduct) {
  UsageCube cube = random_cube(4, 3, 1, 3);
  LatentModel model = random_model(cube, 3, 5);
  model.factors.dynamic_nodes(0).setOnes();
  const Matrix expected = model.factors.static_nodes() * model.factors.metrics().transpose();
  EXPECT_LT((reconstruct_slice(model, 0) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Objective, ExactCubeIsZero) {
  UsageCube shape = random_cube(3, 4, 5, 1);
  LatentModel model = random_model(shape, 2, 2);
  const UsageCube cube = cube_from_model(model);
  EXPECT_EQ(objective(model, cube), 0.0);
  const FactorSet grad = gradients(model, cube);
  EXPECT_EQ(grad.flat().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Objective, ZeroModelGivesSumOfSquares) {
  UsageCube cube = random_cube(3, 4, 2, 7);
  cube.mask = std::vector<BoolMatrix>(2, BoolMatrix::Constant(3, 4, true));
  (*cube.mask)[0](1, 1) = false;
  LatentModel model = LatentModel::for_cube(cube, 2);
  double expected = 0.0;
  for (Index t = 0; t < 2; ++t) {
    for (Index n = 0; n < 3; ++n) {
      for (Index m = 0; m < 4; ++m) {
        if (cube.observed(n, m, t)) expected += cube.values[t](n, m) * cube.values[t](n, m);
      }
    }
  }
  EXPECT_NEAR(objective(model, cube), expected, 1e-12);
}

TEST(Objective, MatchesCellLoopOracle) {
  const UsageCube cube = random_cube(3, 4, 2, 11);
  const LatentModel model = random_model(cube, 2, 12);
  EXPECT_NEAR(objective(model, cube), objective_oracle(model, cube), 1e-10);
}

TEST(Objective, DimensionMismatch) {
  const UsageCube cube = random_cube(3, 4, 2, 11);
  const LatentModel model = random_model(random_cube(3, 5, 2, 1), 2, 12);
  EXPECT_THROW(objective(model, cube), DimensionError);
  EXPECT_THROW(gradients(model, cube), DimensionError);
}

TEST(Objective, L2PenaltyAddsSquaredNorm) {
  const UsageCube cube = random_cube(3, 2, 2, 1);
  const LatentModel model = random_model(cube, 2, 2);
  ObjectiveOptions opts;
  opts.l2_lambda = 0.3;
  EXPECT_NEAR(objective(model, cube, opts),
              objective_oracle(model, cube) + 0.3 * model.factors.flat().squaredNorm(), 1e-10);
}

// Central differences over every coordinate of the flat parameter vector.
Vector finite_difference_gradient(const LatentModel& model, const UsageCube& cube,
                                  const ObjectiveOptions& opts, double h) {
  LatentModel probe = model;
  Vector fd(model.factors.flat().size());
  for (Index i = 0; i < fd.size(); ++i) {
    const double saved = probe.factors.flat()[i];
    probe.factors.flat()[i] = saved + h;
    const double up = objective(probe, cube, opts);
    probe.factors.flat()[i] = saved - h;
    const double down = objective(probe, cube, opts);
    probe.factors.flat()[i] = saved;
    fd[i] = (up - down) / (2.0 * h);
  }
  return fd;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / scale;
}

TEST(Gradients, MatchFiniteDifferencesFixedInstance) {
  const UsageCube cube = random_cube(2, 3, 2, 21);
  const LatentModel model = random_model(cube, 2, 22);
  const Vector analytic = gradients(model, cube).flat();
  const Vector numeric = finite_difference_gradient(model, cube, {}, 1e-5);
  for (Index i = 0; i < analytic.size(); ++i) {
    EXPECT_LT(relative_error(analytic[i], numeric[i]), 1e-4) << "coordinate " << i;
  }
}

// Property: random shapes, ranks, masks and penalty weights.
TEST(Gradients, PropertyMatchFiniteDifferences) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<Index> dim(1, 5), rank(1, 3);
    UsageCube cube = random_cube(dim(rng), dim(rng), dim(rng), rng());
    if (trial % 3 == 0) {
      std::bernoulli_distribution keep(0.7);
      cube.mask.emplace();
      for (Index t = 0; t < cube.num_times(); ++t) {
        BoolMatrix mask(cube.num_nodes(), cube.num_metrics());
        for (Index i = 0; i < mask.size(); ++i) mask(i) = keep(rng);
        cube.mask->push_back(mask);
      }
    }
    const LatentModel model = random_model(cube, rank(rng), rng());
    ObjectiveOptions opts;
    opts.l2_lambda = trial % 4 == 0 ? 0.5 : 0.0;
    const Vector analytic = gradients(model, cube, opts).flat();
    const Vector numeric = finite_difference_gradient(model, cube, opts, 1e-5);
    for (Index i = 0; i < analytic.size(); ++i) {
      ASSERT_LT(relative_error(analytic[i], numeric[i]), 1e-4)
          << "trial " << trial << " coordinate " << i;
    }
  }
}

TEST(Gradients, DuplicatedTimestepsDoubleStaticBlocks) {
  const UsageCube cube = random_cube(3, 2, 2, 31);
  const LatentModel model = random_model(cube, 2, 32);
  UsageCube doubled = cube;
  LatentModel twice = LatentModel::for_cube(random_cube(3, 2, 4, 0), 2);
  for (Index t = 0; t < 2; ++t) {
    doubled.values.push_back(cube.values[t]);
    doubled.timestamps.push_back(cube.timestamps.back() + 600 * (t + 1));
  }
  twice.factors.static_nodes() = model.factors.static_nodes();
  twice.factors.metrics() = model.factors.metrics();
  for (Index t = 0; t < 4; ++t) twice.factors.dynamic_nodes(t) = model.factors.dynamic_nodes(t % 2);
  twice.node_ids = doubled.node_ids;
  twice.metric_ids = doubled.metric_ids;
  twice.timestamps = doubled.timestamps;
  const FactorSet g1 = gradients(model, cube);
  const FactorSet g2 = gradients(twice, doubled);
  EXPECT_LT((g2.static_nodes() - 2.0 * g1.static_nodes()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((g2.metrics() - 2.0 * g1.metrics()).cwiseAbs().maxCoeff(), 1e-12);
}

// Property: (cU, V/c) leaves the objective unchanged.
TEST(Objective, PropertyScaleInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    const UsageCube cube = random_cube(4, 3, 3, rng());
    LatentModel model = random_model(cube, 2, rng());
    const double before = objective(model, cube);
    const double c = trial % 2 == 0 ? scale(rng) : -scale(rng);
    model.factors.static_nodes() *= c;
    model.factors.metrics() /= c;
    EXPECT_LE(std::abs(objective(model, cube) - before), 1e-9 * before);
  }
}

// Property: objective is never negative and only zero on an exact fit.
TEST(Objective, PropertyNonNegative) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const UsageCube cube = random_cube(3, 3, 3, rng());
    const LatentModel model = random_model(cube, 2, rng());
    EXPECT_GT(objective(model, cube), 0.0);
  }
}

TEST(Objective, MaskedCellValueIsIgnored) {
  UsageCube cube = random_cube(3, 3, 2, 41);
  cube.mask = std::vector<BoolMatrix>(2, BoolMatrix::Constant(3, 3, true));
  (*cube.mask)[1](0, 2) = false;
  const LatentModel model = random_model(cube, 2, 42);
  const double before = objective(model, cube);
  const FactorSet g_before = gradients(model, cube);
  cube.values[1](0, 2) += 1e3;
  EXPECT_EQ(objective(model, cube), before);
  EXPECT_EQ(gradients(model, cube), g_before);
}

TEST(Gradients, ReproducibleAndFreeReductionAgree) {
  const UsageCube cube = random_cube(6, 5, 33, 51);
  const LatentModel model = random_model(cube, 3, 52);
  ObjectiveOptions fixed, free;
  free.reproducible_reduction = false;
  const double a = objective(model, cube, fixed);
  const double b = objective(model, cube, free);
  EXPECT_NEAR(a, b, 1e-10 * a);
  EXPECT_LT((gradients(model, cube, fixed).flat() - gradients(model, cube, free).flat())
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
  // The fixed-order path is bitwise stable across calls.
  EXPECT_EQ(objective(model, cube, fixed), a);
  EXPECT_EQ(gradients(model, cube, fixed), gradients(model, cube, fixed));
}

TEST(ObjectiveAndGradient, SliceSubsetScaled) {
  const UsageCube cube = random_cube(3, 3, 4, 61);
  const LatentModel model = random_model(cube, 2, 62);
  FactorSet grad(model.shape());
  const std::vector<Index> slices{1, 3};
  const double value = objective_and_gradient(model.factors, cube, {}, grad, slices, 2.0);
  double expected = 0.0;
  for (Index t : slices) {
    expected += (cube.values[t] - reconstruct_slice(model, t)).squaredNorm();
  }
  EXPECT_NEAR(value, 2.0 * expected, 1e-10);
  // Unsampled dynamic blocks get no gradient.
  EXPECT_EQ(grad.dynamic_nodes(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(grad.dynamic_nodes(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FactorSet, LayoutAndValidation) {
  EXPECT_THROW(FactorSet(ModelShape{0, 1, 1, 1}), std::invalid_argument);
  FactorSet f(ModelShape{2, 3, 4, 2});
  EXPECT_EQ(f.flat().size(), (2 + 3 + 4 * 2) * 2);
  f.metrics()(0, 0) = 7.0;
  EXPECT_EQ(f.flat()[2 * 2], 7.0);
  f.dynamic_nodes(3)(1, 1) = 9.0;
  EXPECT_EQ(f.flat()[f.flat().size() - 1], 9.0);
}

TEST(ModelIo, RoundTripIsExact) {
  testing::TempDir dir("model");
  const UsageCube cube = random_cube(4, 3, 5, 71);
  const LatentModel model = random_model(cube, 3, 72);
  save_model(model, dir.file("model"));
  const LatentModel back = load_model(dir.file("model"));
  EXPECT_EQ(back.factors, model.factors);
  EXPECT_EQ(back.node_ids, model.node_ids);
  EXPECT_EQ(back.metric_ids, model.metric_ids);
  EXPECT_EQ(back.timestamps, model.timestamps);
  EXPECT_TRUE(std::filesystem::exists(dir.file("model/U_bar.csv")));
  EXPECT_TRUE(std::filesystem::exists(dir.file("model/V.csv")));
  EXPECT_TRUE(std::filesystem::exists(dir.file("model/U_hat/t4.csv")));
}

TEST(ModelIo, TruncatedMatrixRejected) {
  testing::TempDir dir("model");
  const UsageCube cube = random_cube(2, 2, 2, 1);
  save_model(random_model(cube, 2, 2), dir.file("model"));
  testing::write_text(dir.file("model/V.csv"), "1,2\n");
  EXPECT_THROW(load_model(dir.file("model")), DataError);
}

}  // namespace
}  // namespace dynmf
