// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "hclip/errors.hpp"
#include "hclip/graph_schedule.hpp"
#include "hclip/random.hpp"
#include "hclip/schedules.hpp"

namespace hclip {
namespace {

TEST(Clip, HandExamples) {
  Vector y(2);
  y << 3.0, 4.0;
  EXPECT_EQ(clip(Vector::Zero(2), 1.0), Vector::Zero(2));
  EXPECT_EQ(clip(y, 10.0), y);
  Vector c = clip(y, 2.5);
  EXPECT_DOUBLE_EQ(c[0], 1.5);
  EXPECT_DOUBLE_EQ(c[1], 2.0);
  EXPECT_THROW(clip(y, 0.0), Error);
}

TEST(Clip, NormAndHomogeneity) {
  Stream rng(5);
  for (int k = 0; k < 500; ++k) {
    Vector y(6);
    for (int j = 0; j < 6; ++j) y[j] = 10.0 * (rng.uniform() - 0.5);
    const double lam = 0.1 + 5.0 * rng.uniform();
    const Vector c = clip(y, lam);
    EXPECT_NEAR(c.norm(), std::min(y.norm(), lam), 1e-12 * std::max(1.0, lam));
    if (y.norm() <= lam) {
      EXPECT_EQ(c, y);
    }
    const double s = 0.01 + 10.0 * rng.uniform();
    EXPECT_LT((clip(s * y, s * lam) - s * c).norm(), 1e-12 * s * std::max(1.0, lam));
  }
}

TEST(Params, ExampleValues) {
  const ScheduleParams e1 = ScheduleParams::example1();
  EXPECT_DOUBLE_EQ(e1.step_size(1), 5.0);
  EXPECT_DOUBLE_EQ(e1.clip_threshold(1), 2.0);
  EXPECT_EQ(e1.horizon, 2000);
  // At t = e the step is 5 / (e^0.75 * 4).
  ScheduleParams cont = e1;
  const double e = std::exp(1.0);
  const double eta_e = 1.0 / (cont.m * std::pow(std::log(e) + cont.b1, 2) * std::pow(e, cont.kappa));
  EXPECT_NEAR(eta_e, 0.5903, 5e-4);
  EXPECT_NEAR(eta_e, 5.0 / (std::pow(e, 0.75) * 4.0), 1e-14);
  const ScheduleParams e2 = ScheduleParams::example2();
  EXPECT_NEAR(e2.step_size(1), 1.0 / 560.0, 1e-16);
  EXPECT_DOUBLE_EQ(e2.clip_threshold(1), 100.0);
}

TEST(Params, MonotoneInTime) {
  Stream rng(9);
  for (int k = 0; k < 50; ++k) {
    ScheduleParams p;
    p.kappa = 0.3 + rng.uniform();
    p.alpha = rng.uniform();
    p.m = 0.1 + 10.0 * rng.uniform();
    p.b1 = 1.0 + 4.0 * rng.uniform();
    p.lambda = 0.5 + rng.uniform();
    p.horizon = 500;
    p.validate();
    for (std::int64_t t = 1; t < p.horizon; ++t) {
      EXPECT_LE(p.step_size(t + 1), p.step_size(t));
      EXPECT_GE(p.clip_threshold(t + 1), p.clip_threshold(t));
    }
  }
}

TEST(Params, ValidationErrors) {
  ScheduleParams p;
  p.delta = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = ScheduleParams{};
  p.horizon = 0;
  EXPECT_THROW(p.validate(), Error);
  p = ScheduleParams{};
  p.m = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = ScheduleParams{};
  p.delta = 0.5;
  EXPECT_DOUBLE_EQ(p.a0(), 1.0);
  p.delta = 0.01;
  EXPECT_DOUBLE_EQ(p.a0(), std::log(100.0));
}

double partial_sum(double s, std::int64_t n) {
  double acc = 0.0;
  for (std::int64_t t = n; t >= 1; --t) {
    const double lt = std::log(static_cast<double>(t)) + 1.0;
    acc += 1.0 / (std::pow(static_cast<double>(t), s) * lt * lt);
  }
  return acc;
}

TEST(Series, KnownValues) {
  SeriesValue two = series_constant(0.0, 2.0);
  EXPECT_GE(two.value, 1.13);
  EXPECT_LE(two.value, 1.16);
  EXPECT_NEAR(partial_sum(2.0, 10), 1.139, 5e-3);
  EXPECT_LE(two.lower, two.value);
  EXPECT_GE(two.upper, two.value);
  EXPECT_LE(two.upper - two.lower, 1e-9 * two.value + 1e-15);

  SeriesValue twenty = series_constant(1.0, 21.0);
  EXPECT_GE(twenty.value, 1.0);
  EXPECT_LE(twenty.value, 1.000001);

  try {
    series_constant(0.0, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergent_series);
  }
}

TEST(Series, EnclosureContainsFinerPartialSums) {
  for (double s : {1.05, 1.3, 1.5, 2.0, 3.0}) {
    SeriesValue v = series_constant(0.0, s);
    // Partial sums increase to the limit, so every one lies below the upper end.
    EXPECT_LE(partial_sum(s, 10 * v.cutoff), v.upper) << s;
    EXPECT_GE(v.lower, partial_sum(s, v.cutoff) * (1 - 1e-12)) << s;
  }
}

TEST(Series, ExactlyOneIsSlowButFinite) {
  SeriesValue v = series_constant(0.0, 1.0);
  // Tail of sum 1/(t (1+log t)^2) past M is about 1/(1+log M).
  EXPECT_GT(v.value, partial_sum(1.0, 100000));
  EXPECT_LT(v.upper - v.lower, 1e-6 * v.value);
}

ProblemConstants sample_constants() {
  ProblemConstants c;
  ContractionConstants cc = contraction_constants(20, 0.5, 4);
  c.gamma = cc.gamma;
  c.beta = cc.beta;
  c.n_agents = 20;
  c.smoothness = 1.2;
  c.b_star = 0.8;
  c.sigma = 3.0;
  c.p = 1.5;
  c.delta1 = 2.0;
  c.r1 = 4.0;
  return c;
}

ScheduleParams with_exponents(double alpha, double kappa) {
  ScheduleParams p;
  p.alpha = alpha;
  p.kappa = kappa;
  p.horizon = 1000;
  return p;
}

TEST(Condition, ExponentLineAtTheRemarkPair) {
  ProblemConstants c = sample_constants();
  for (double p : {1.05, 1.1, 1.3, 1.5, 1.75, 2.0}) {
    c.p = p;
    ConditionReport r = check_condition7(with_exponents(1.0 / (3 * p), (2 * p + 1) / (3 * p)), c);
    EXPECT_TRUE(r.lines[0].pass) << p << " " << r.lines[0].margin;
  }
}

TEST(Condition, ExponentLineBoundaryEqualityAndFailure) {
  ProblemConstants c = sample_constants();
  c.p = 2.0;
  ConditionReport r = check_condition7(with_exponents(0.25, 0.75), c);
  EXPECT_TRUE(r.lines[0].pass);
  EXPECT_NEAR(r.lines[0].margin, 0.0, 1e-12);
  c.p = 1.5;
  ConditionReport bad = check_condition7(with_exponents(0.25, 0.6), c);
  EXPECT_FALSE(bad.lines[0].pass);
  EXPECT_FALSE(bad.feasible());
}

TEST(Condition, FlagsBaseBelowOne) {
  ConditionReport r = check_condition7(ScheduleParams::example1(), sample_constants());
  EXPECT_FALSE(r.m_at_least_one);
  EXPECT_TRUE(r.b1_at_least_one);
  EXPECT_FALSE(r.feasible());
  EXPECT_FALSE(r.digest().empty());
  EXPECT_NE(r.to_text().find("line"), std::string::npos);
}

TEST(Condition, DivergentSeriesFailsItsLine) {
  // 2 kappa - 2 alpha < 1: the series on lines 2 and 5 diverge.
  ProblemConstants c = sample_constants();
  ConditionReport r = check_condition7(with_exponents(0.25, 0.6), c);
  EXPECT_TRUE(r.lines[1].divergent);
  EXPECT_FALSE(r.lines[1].pass);
  EXPECT_TRUE(r.lines[4].divergent);
  EXPECT_FALSE(r.lines[4].pass);
  // At the boundary pair two exponents sit exactly on 1 and still converge.
  ConditionReport ok = check_condition7(with_exponents(1.0 / 3.0, 5.0 / 6.0), c);
  for (const auto& l : ok.lines) EXPECT_FALSE(l.divergent) << l.name;
}

TEST(Suggest, OutputPassesTheChecker) {
  ProblemConstants c = sample_constants();
  for (double p : {1.1, 1.5, 2.0}) {
    c.p = p;
    ScheduleParams s = suggest_params(c, 0.1, 2000);
    EXPECT_NEAR(s.alpha, 1.0 / (2 * p), 1e-15);
    EXPECT_NEAR(s.kappa, 0.5 + 1.0 / (2 * p), 1e-15);
    ConditionReport r = check_condition7(s, c);
    EXPECT_TRUE(r.feasible()) << p << "\n" << r.to_text();
  }
}

TEST(Suggest, ClipBaseGrowsWithHeterogeneity) {
  ProblemConstants c = sample_constants();
  ScheduleParams a = suggest_params(c, 0.1, 2000);
  c.b_star *= 2.0;
  ScheduleParams b = suggest_params(c, 0.1, 2000);
  EXPECT_GE(b.lambda, a.lambda);
}

}  // namespace
}  // namespace hclip
