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

#include "dynmf/anomaly.hpp"
#include "dynmf/error.hpp"
#include "test_util.hpp"

namespace dynmf {
namespace {

using testing::random_cube;
using testing::random_model;

AnomalyScoreSeries series_from(const Matrix& scores, std::int64_t step = 600) {
  AnomalyScoreSeries s;
  for (Index n = 0; n < scores.cols(); ++n) s.node_ids.push_back("node" + std::to_string(n));
  for (Index t = 0; t < scores.rows(); ++t) s.timestamps.push_back(1000 + step * t);
  s.scores = scores;
  s.scorable = BoolMatrix::Constant(scores.rows(), scores.cols(), true);
  return s;
}

double score_oracle(const LatentModel& model, const UsageCube& cube, Index n, Index t) {
  double total = 0.0;
  int count = 0;
  for (Index m = 0; m < cube.num_metrics(); ++m) {
    if (!cube.observed(n, m, t)) continue;
    double recon = 0.0;
    for (Index k = 0; k < model.rank(); ++k) {
      recon += model.factors.static_nodes()(n, k) * model.factors.dynamic_nodes(t)(n, k) *
               model.factors.metrics()(m, k);
    }
    total += std::abs(cube.values[t](n, m) - recon);
    ++count;
  }
  return count == 0 ? 0.0 : total / count;
}

TEST(Score, PerfectFitIsZero) {
  const UsageCube shape = random_cube(3, 4, 5, 1);
  const LatentModel model = random_model(shape, 2, 2);
  UsageCube cube = shape;
  for (Index t = 0; t < 5; ++t) cube.values[t] = reconstruct_slice(model, t);
  const AnomalyScoreSeries s = score(model, cube);
  EXPECT_EQ(s.scores.rows(), 5);
  EXPECT_EQ(s.scores.cols(), 3);
  EXPECT_EQ(s.scores.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(s.scorable.all());
  EXPECT_FALSE(s.threshold.has_value());
}

TEST(Score, MeanOfAbsoluteResiduals) {
  UsageCube cube = random_cube(1, 3, 1, 1);
  cube.values[0] << 1.0, -2.0, 3.0;
  const std::vector<Matrix> recon{Matrix::Zero(1, 3)};
  EXPECT_DOUBLE_EQ(score_residuals(cube, recon).scores(0, 0), 2.0);
}

TEST(Score, MatchesCellLoopOracle) {
  UsageCube cube = random_cube(4, 5, 6, 3);
  cube.mask = std::vector<BoolMatrix>(6, BoolMatrix::Constant(4, 5, true));
  (*cube.mask)[2](1, 3) = false;
  (*cube.mask)[4].row(2).setConstant(false);  // node 2 fully masked at t=4
  const LatentModel model = random_model(cube, 3, 4);
  const AnomalyScoreSeries s = score(model, cube);
  for (Index t = 0; t < 6; ++t) {
    for (Index n = 0; n < 4; ++n) {
      EXPECT_NEAR(s.scores(t, n), score_oracle(model, cube, n, t), 1e-12);
    }
  }
  EXPECT_FALSE(s.scorable(4, 2));
  EXPECT_EQ(s.scores(4, 2), 0.0);
  EXPECT_EQ(s.scorable.count(), 6 * 4 - 1);
}

// Property: rescaling ū_k by c_k and û_k by 1/c_k leaves scores unchanged.
TEST(Score, PropertyRescalingInvariance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const UsageCube cube = random_cube(4, 3, 5, rng());
    LatentModel model = random_model(cube, 3, rng());
    const AnomalyScoreSeries before = score(model, cube);
    for (Index k = 0; k < 3; ++k) {
      const double c = mag(rng) * (trial % 2 == 0 ? 1.0 : -1.0);
      model.factors.static_nodes().col(k) *= c;
      for (Index t = 0; t < 5; ++t) model.factors.dynamic_nodes(t).col(k) /= c;
    }
    const AnomalyScoreSeries after = score(model, cube);
    EXPECT_LT((after.scores - before.scores).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// Property: pushing one observed residual further from zero raises that score.
TEST(Score, PropertyMonotoneInResidual) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    UsageCube cube = random_cube(3, 4, 2, rng());
    const LatentModel model = random_model(cube, 2, rng());
    const AnomalyScoreSeries before = score(model, cube);
    std::uniform_int_distribution<Index> n_pick(0, 2), m_pick(0, 3), t_pick(0, 1);
    const Index n = n_pick(rng), m = m_pick(rng), t = t_pick(rng);
    const double residual = cube.values[t](n, m) - reconstruct_cell(model, n, m, t);
    cube.values[t](n, m) += residual >= 0 ? 0.5 : -0.5;
    const AnomalyScoreSeries after = score(model, cube);
    EXPECT_GT(after.scores(t, n), before.scores(t, n));
  }
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.25), 2.5);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.9), 7.0);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

TEST(Flag, AllEqualFlagsNothing) {
  const AnomalyScoreSeries s = flag(series_from(Matrix::Constant(10, 10, 0.3)),
                                    FlagMethod::parse("quantile:0.99"));
  EXPECT_EQ(*s.threshold, 0.3);
  EXPECT_EQ(s.flags->count(), 0);
  const AnomalyScoreSeries z = flag(series_from(Matrix::Constant(10, 10, 0.3)),
                                    FlagMethod::parse("zscore:3"));
  EXPECT_EQ(z.flags->count(), 0);
}

TEST(Flag, SingleHotCell) {
  Matrix scores = Matrix::Zero(100, 10);
  scores(37, 4) = 10.0;
  const AnomalyScoreSeries s = flag(series_from(scores), {FlagMethod::Kind::kQuantile, 0.995});
  ASSERT_EQ(s.flags->count(), 1);
  EXPECT_TRUE((*s.flags)(37, 4));
}

TEST(Flag, ZScoreUsesPopulationStd) {
  Matrix scores(4, 1);
  scores << 1, 2, 3, 4;  // mean 2.5, population std sqrt(1.25)
  const AnomalyScoreSeries s = flag(series_from(scores), FlagMethod::parse("zscore:1"));
  EXPECT_DOUBLE_EQ(*s.threshold, 2.5 + std::sqrt(1.25));
  EXPECT_EQ(s.flags->count(), 1);
}

TEST(Flag, UnscorableCellsIgnored) {
  Matrix scores = Matrix::Zero(10, 10);
  AnomalyScoreSeries s = series_from(scores);
  s.scorable(0, 0) = false;
  s.scores(0, 0) = 0.0;
  s.scores(5, 5) = 1.0;
  const AnomalyScoreSeries f = flag(s, FlagMethod::parse("quantile:0.99"));
  EXPECT_FALSE((*f.flags)(0, 0));
  EXPECT_TRUE((*f.flags)(5, 5));
  EXPECT_NEAR(f.flag_rate(), 1.0 / 99.0, 1e-15);
}

TEST(Flag, InvalidParameters) {
  const AnomalyScoreSeries s = series_from(Matrix::Ones(2, 2));
  EXPECT_THROW(flag(s, {FlagMethod::Kind::kQuantile, 0.0}), std::invalid_argument);
  EXPECT_THROW(flag(s, {FlagMethod::Kind::kQuantile, 1.0}), std::invalid_argument);
  EXPECT_THROW(flag(s, {FlagMethod::Kind::kZScore, 0.0}), std::invalid_argument);
  EXPECT_THROW(FlagMethod::parse("median:0.5"), std::invalid_argument);
  EXPECT_THROW(FlagMethod::parse("quantile"), std::invalid_argument);
  EXPECT_THROW(FlagMethod::parse("quantile:abc"), std::invalid_argument);
  EXPECT_EQ(FlagMethod::parse("zscore:2.5").to_string(), "zscore:2.5");
}

// Property: flags agree with a direct comparison against a sorted copy, and a
// lower quantile flags a superset of a higher one.
TEST(Flag, PropertyBruteForceAndNesting) {
  std::mt19937_64 rng(10);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> level(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix scores(20, 7);
    for (Index i = 0; i < scores.size(); ++i) {
      scores(i) = trial % 5 == 0 ? std::floor(expo(rng) * 3) : expo(rng);  // ties sometimes
    }
    const AnomalyScoreSeries s = series_from(scores);
    double q1 = level(rng), q2 = level(rng);
    if (q1 > q2) std::swap(q1, q2);
    const AnomalyScoreSeries f1 = flag(s, {FlagMethod::Kind::kQuantile, q1});
    const AnomalyScoreSeries f2 = flag(s, {FlagMethod::Kind::kQuantile, q2});
    EXPECT_TRUE((*f1.flags || !*f2.flags).all());

    std::vector<double> sorted(scores.data(), scores.data() + scores.size());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q2 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double threshold = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    EXPECT_NEAR(*f2.threshold, threshold, 1e-12);
    for (Index i = 0; i < scores.size(); ++i) {
      EXPECT_EQ((*f2.flags)(i), scores(i) > *f2.threshold);
    }
  }
}

std::vector<EventRecord> one_event(std::int64_t ts, const std::string& node,
                                   const std::string& type = "segfault") {
  return {EventRecord{ts, node, ErrorType::parse(type)}};
}

TEST(AlignEvents, ExactTimestampCooccurs) {
  Matrix scores = Matrix::Zero(6, 3);
  scores(2, 1) = 5.0;
  const AnomalyScoreSeries s = flag(series_from(scores), FlagMethod::parse("quantile:0.9"));
  const AlignmentReport r = align_events(s, one_event(2200, "node1"));
  ASSERT_EQ(r.matches.size(), 1u);
  EXPECT_TRUE(r.matches[0].resolved);
  EXPECT_TRUE(r.matches[0].flag_cooccurs);
  EXPECT_EQ(*r.matches[0].local_score, 5.0);
  EXPECT_EQ(r.matches[0].time_steps, (std::vector<Index>{1, 2, 3}));
}

TEST(AlignEvents, InclusiveWindowBoundary) {
  // Timesteps 1000, 3000, 5000, far enough apart that one event reaches one step.
  Matrix scores = Matrix::Zero(3, 1);
  scores(0, 0) = 1.0;
  const AnomalyScoreSeries s = flag(series_from(scores, 2000), FlagMethod::parse("quantile:0.5"));
  ASSERT_TRUE((*s.flags)(0, 0));
  auto r = align_events(s, one_event(1599, "node0"), 600);
  EXPECT_EQ(r.matches[0].time_steps, (std::vector<Index>{0}));
  EXPECT_TRUE(r.matches[0].flag_cooccurs);
  r = align_events(s, one_event(1600, "node0"), 600);
  EXPECT_EQ(r.matches[0].time_steps, (std::vector<Index>{0}));
  r = align_events(s, one_event(1601, "node0"), 600);
  EXPECT_TRUE(r.matches[0].time_steps.empty());
  EXPECT_FALSE(r.matches[0].flag_cooccurs);
  EXPECT_FALSE(r.matches[0].local_score.has_value());
  // Events before a timestep count too.
  r = align_events(s, one_event(2400, "node0"), 600);
  EXPECT_EQ(r.matches[0].time_steps, (std::vector<Index>{1}));
  r = align_events(s, one_event(2399, "node0"), 600);
  EXPECT_TRUE(r.matches[0].time_steps.empty());
  // A wide window reaches both neighbours.
  r = align_events(s, one_event(3000, "node0"), 2000);
  EXPECT_EQ(r.matches[0].time_steps, (std::vector<Index>{0, 1, 2}));
}

TEST(AlignEvents, UnresolvedNodesReported) {
  const AnomalyScoreSeries s = flag(series_from(Matrix::Zero(3, 2)), FlagMethod::parse("zscore:1"));
  std::vector<EventRecord> events = one_event(1000, "ghost", "write_error");
  events.push_back({1000, "node0", ErrorType::parse("write_error")});
  const AlignmentReport r = align_events(s, events);
  ASSERT_EQ(r.unresolved.size(), 1u);
  EXPECT_EQ(r.unresolved[0].node, "ghost");
  EXPECT_FALSE(r.matches[0].resolved);
  ASSERT_EQ(r.by_type.size(), 1u);
  EXPECT_EQ(r.by_type[0].events, 2u);
  EXPECT_EQ(r.by_type[0].resolved, 1u);
}

TEST(AlignEvents, SummaryPerTypeAndBackground) {
  Matrix scores = Matrix::Constant(10, 2, 1.0);
  scores(4, 0) = 9.0;
  const AnomalyScoreSeries s = flag(series_from(scores), FlagMethod::parse("quantile:0.9"));
  std::vector<EventRecord> events = one_event(1000 + 600 * 4, "node0", "segfault");
  events.push_back({1000 + 600 * 8, "node1", ErrorType::parse("write_error")});
  const AlignmentReport r = align_events(s, events);
  ASSERT_EQ(r.by_type.size(), 2u);
  EXPECT_EQ(r.by_type[0].error_type, "segfault");
  EXPECT_EQ(r.by_type[0].cooccurrence_rate, 1.0);
  EXPECT_EQ(r.by_type[0].adjacent_cells, 3u);
  EXPECT_NEAR(r.by_type[0].adjacent_mean, 11.0 / 3.0, 1e-12);
  EXPECT_EQ(r.by_type[0].adjacent_median, 1.0);
  EXPECT_EQ(r.by_type[1].error_type, "write_error");
  EXPECT_EQ(r.by_type[1].cooccurrence_rate, 0.0);
  EXPECT_EQ(r.background_cells, 20u - 6u);
  EXPECT_EQ(r.background_mean, 1.0);
  EXPECT_NEAR(r.base_flag_rate, 0.05, 1e-15);
}

TEST(AlignEvents, Preconditions) {
  const AnomalyScoreSeries raw = series_from(Matrix::Zero(2, 2));
  EXPECT_THROW(align_events(raw, {}), std::invalid_argument);
  const AnomalyScoreSeries s = flag(raw, FlagMethod::parse("zscore:1"));
  EXPECT_THROW(align_events(s, {}, 0), std::invalid_argument);
}

TEST(ErrorTypeParse, KnownAndOther) {
  EXPECT_EQ(ErrorType::parse("write_error").kind, ErrorType::Kind::kWriteError);
  EXPECT_EQ(ErrorType::parse("segfault").kind, ErrorType::Kind::kSegfault);
  EXPECT_EQ(ErrorType::parse("inode_error").kind, ErrorType::Kind::kInodeError);
  const ErrorType other = ErrorType::parse("oom_kill");
  EXPECT_EQ(other.kind, ErrorType::Kind::kOther);
  EXPECT_EQ(other.name(), "oom_kill");
  EXPECT_THROW(ErrorType::parse(" "), std::invalid_argument);
}

TEST(ScoresCsv, RoundTripFlaggedAndUnflagged) {
  testing::TempDir dir("scores");
  std::mt19937_64 rng(12);
  std::exponential_distribution<double> expo(1.0);
  Matrix scores(7, 4);
  for (Index i = 0; i < scores.size(); ++i) scores(i) = expo(rng);
  AnomalyScoreSeries s = series_from(scores);
  s.scorable(3, 2) = false;
  s.scores(3, 2) = 0.0;
  // Node labels deliberately out of sorted order.
  s.node_ids = {"b", "d", "a", "c"};

  write_scores_csv(s, dir.file("raw.csv"));
  AnomalyScoreSeries back = read_scores_csv(dir.file("raw.csv"));
  EXPECT_FALSE(back.flags.has_value());
  ASSERT_EQ(back.node_ids, (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(back.timestamps, s.timestamps);
  const std::vector<Index> perm{2, 0, 3, 1};  // back column -> s column
  for (Index j = 0; j < 4; ++j) {
    EXPECT_EQ(back.scores.col(j), s.scores.col(perm[j]));
    EXPECT_TRUE((back.scorable.col(j) == s.scorable.col(perm[j])).all());
  }

  const AnomalyScoreSeries flagged = flag(s, FlagMethod::parse("quantile:0.8"));
  write_scores_csv(flagged, dir.file("flagged.csv"));
  back = read_scores_csv(dir.file("flagged.csv"));
  ASSERT_TRUE(back.flags.has_value());
  for (Index j = 0; j < 4; ++j) {
    EXPECT_TRUE((back.flags->col(j) == flagged.flags->col(perm[j])).all());
  }
  // Reflagging the reloaded series with the same rule reproduces the flags.
  const AnomalyScoreSeries again = flag(back, FlagMethod::parse("quantile:0.8"));
  EXPECT_TRUE((*again.flags == *back.flags).all());

  const std::string body = testing::read_text(dir.file("flagged.csv"));
  EXPECT_EQ(body.rfind("timestamp,node,score,flag\n", 0), 0u);
  EXPECT_NE(body.find("\n1000,a,"), std::string::npos);
}

TEST(ScoresCsv, MalformedRejected) {
  testing::TempDir dir("scores");
  testing::write_text(dir.file("a.csv"), "timestamp,node,score,flag\n1,a,-1,\n");
  EXPECT_THROW(read_scores_csv(dir.file("a.csv")), DataError);
  testing::write_text(dir.file("b.csv"), "timestamp,node,score,flag\n1,a,1,\n1,b,1,\n2,a,1,\n");
  EXPECT_THROW(read_scores_csv(dir.file("b.csv")), DataError);
  testing::write_text(dir.file("c.csv"), "timestamp,node,score,flag\n1,a,1,1\n2,a,5,0\n");
  EXPECT_THROW(read_scores_csv(dir.file("c.csv")), DataError);
}

TEST(EventsCsv, RoundTrip) {
  testing::TempDir dir("events");
  std::vector<EventRecord> events = one_event(5, "x", "segfault");
  events.push_back({7, "y", ErrorType::parse("custom thing")});
  write_events_csv(events, dir.file("e.csv"));
  const auto back = read_events_csv(dir.file("e.csv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].timestamp, 7);
  EXPECT_EQ(back[1].node, "y");
  EXPECT_EQ(back[1].error_type.name(), "custom thing");
  EXPECT_EQ(back[0].error_type.kind, ErrorType::Kind::kSegfault);
}

}  // namespace
}  // namespace dynmf
