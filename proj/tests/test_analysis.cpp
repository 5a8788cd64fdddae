// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "hclip/analysis.hpp"
#include "hclip/errors.hpp"
#include "support.hpp"

namespace hclip {
namespace {

using testing::first_step;
using testing::quadratic_set;

Problem desk_problem(int n_agents, int dim, double noise_scale = 0.2) {
  SyntheticSpec spec;
  spec.n_agents = n_agents;
  spec.dim = dim;
  auto sigma = declared_sigma(NoiseKind::student_t, 2.0, noise_scale, 1.5, dim);
  return Problem::build(generate_synthetic(spec, NoiseModel::student_t(2.0, noise_scale, 1.5, *sigma)),
                        switching_ring(n_agents, 4));
}

ScheduleParams example1(std::int64_t horizon) {
  ScheduleParams p = ScheduleParams::example1();
  p.horizon = horizon;
  return p;
}

TEST(NetworkBound, SingleAgentHasNoDeviation) {
  Problem prob = Problem::build(quadratic_set({Vector::Constant(2, 1.0)}), uniform_complete(1));
  RunRecord r = run_clipped(prob, first_step(0.1, 1.0, 50), RunOptions{});
  BoundCheckReport rep = check_lemma2(r, prob);
  EXPECT_TRUE(rep.pass());
  for (std::size_t k = 0; k < r.rows.size(); ++k) EXPECT_EQ(r.at(r.deviation, k, 0), 0.0);
}

TEST(NetworkBound, ZeroGradientRunStaysUnderTheInitialTerm) {
  const int n = 5;
  std::vector<LocalObjective> locals;
  for (int i = 0; i < n; ++i) locals.emplace_back(Matrix::Zero(1, 2), Vector::Zero(1), 0.0);
  Optimum flat;
  flat.x_star = Vector::Zero(2);
  flat.hessian = Matrix::Zero(2, 2);
  flat.local_grad_norms.assign(n, 0.0);
  const Problem prob{ObjectiveSet(std::move(locals), NoiseModel::none()), switching_ring(n, 2), flat};
  RunRecord r = run_clipped(prob, example1(150), RunOptions{});
  const ContractionConstants cc = contraction_constants(prob.schedule);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const double initial_term = n * cc.gamma * std::pow(cc.beta, static_cast<double>(k)) * r.r1;
    for (int i = 0; i < n; ++i) EXPECT_LE(r.at(r.deviation, k, i), initial_term + 1e-12);
  }
  EXPECT_TRUE(check_lemma2(r, prob).pass());
}

TEST(NetworkBound, DeskRunHasNoViolations) {
  const Problem prob = desk_problem(20, 50);
  RunOptions o;
  o.seed = 3;
  RunRecord r = run_clipped(prob, example1(2000), o);
  BoundCheckReport rep = check_lemma2(r, prob);
  EXPECT_EQ(rep.violations, 0) << rep.summary();
  EXPECT_EQ(rep.checked, 2000 * 20);
  EXPECT_EQ(rep.points.size(), 2000u);
}

TEST(NetworkBound, RejectsStridedAndBaselineRecords) {
  const Problem prob = desk_problem(4, 3);
  RunOptions o;
  o.stride = 3;
  RunRecord strided = run_clipped(prob, example1(30), o);
  try {
    check_lemma2(strided, prob);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_resolution);
  }
  EXPECT_THROW(check_eq6(strided, prob), Error);
  RunRecord base = run_unclipped_baseline(prob, example1(30), RunOptions{});
  EXPECT_THROW(check_lemma2(base, prob), Error);
}

TEST(NetworkBound, TightenedConstantsAreCaught) {
  const Problem prob = desk_problem(8, 5);
  RunRecord r = run_clipped(prob, example1(300), RunOptions{});
  BoundCheckReport rep = check_lemma2(r, ContractionConstants{0.01, 0.01});
  EXPECT_GT(rep.violations, 0);
}

TEST(GradientBound, HomogeneousAgentsAtTheOptimum) {
  const Vector c = Vector::Constant(3, 0.5);
  Problem prob = Problem::build(quadratic_set({c, c, c}), uniform_complete(3));
  RunOptions o;
  o.initial_states = StateMatrix(3, 3);
  for (int i = 0; i < 3; ++i) o.initial_states->row(i) = c.transpose();
  RunRecord r = run_clipped(prob, first_step(0.1, 1.0, 5), o);
  Eq6Report rep = check_eq6(r, prob);
  EXPECT_TRUE(rep.bounds.pass());
  EXPECT_EQ(r.at(r.exact_grad_norm, 0, 0), 0.0);
}

TEST(GradientBound, HoldsOnDeskAndFarInitializations) {
  const Problem prob = desk_problem(10, 20);
  RunOptions o;
  o.seed = 8;
  Eq6Report near = check_eq6(run_clipped(prob, example1(500), o), prob);
  EXPECT_EQ(near.bounds.violations, 0) << near.bounds.summary();

  StateMatrix far = initial_states(10, 20, 8);
  for (int i = 0; i < 10; ++i) far.row(i) *= 1000.0 / far.row(i).norm();
  o.initial_states = far;
  Eq6Report rep = check_eq6(run_clipped(prob, example1(500), o), prob);
  EXPECT_EQ(rep.bounds.violations, 0) << rep.bounds.summary();
  EXPECT_FALSE(rep.half_threshold_held);
  EXPECT_EQ(rep.first_half_threshold_miss, 1);
}

TEST(ClipSplit, NoNoiseMeansNoError) {
  Problem prob = Problem::build(quadratic_set({Vector::Constant(3, 1.0)}), uniform_complete(1));
  Lemma5Report rep = check_lemma5_monte_carlo(prob.objectives, 0, Vector::Zero(3), NoiseModel::none(), 10.0,
                                              10000, 1);
  EXPECT_TRUE(rep.grad_condition);
  EXPECT_EQ(rep.bias_norm, 0.0);
  EXPECT_EQ(rep.max_fluct_norm, 0.0);
  EXPECT_TRUE(rep.pass());
  EXPECT_THROW(check_lemma5_monte_carlo(prob.objectives, 0, Vector::Zero(3), NoiseModel::none(), 1.0, 100, 1),
               Error);
}

TEST(ClipSplit, HeavyTailBiasUnderTheBound) {
  const Problem prob = desk_problem(4, 10);
  const Vector point = prob.optimum.x_star + Vector::Constant(10, 0.3);
  const double g = prob.objectives.exact_gradient(1, point).norm();
  ASSERT_GT(g, 0.0);
  Lemma5Report rep =
      check_lemma5_monte_carlo(prob.objectives, 1, point, prob.objectives.noise(), 20.0 * g, 100000, 4);
  EXPECT_TRUE(rep.grad_condition);
  EXPECT_TRUE(rep.cap_held);
  EXPECT_LE(rep.bias_norm, kMonteCarloSlack * rep.bias_bound) << rep.summary();
  EXPECT_TRUE(rep.pass()) << rep.summary();
}

TEST(ClipSplit, CapHoldsEvenWhenTheGradientConditionFails) {
  const Problem prob = desk_problem(4, 10, 5.0);
  const Vector point = prob.optimum.x_star + Vector::Constant(10, 3.0);
  const double g = prob.objectives.exact_gradient(0, point).norm();
  Lemma5Report rep = check_lemma5_monte_carlo(prob.objectives, 0, point, prob.objectives.noise(), g, 20000, 2);
  EXPECT_FALSE(rep.grad_condition);
  EXPECT_TRUE(rep.cap_held);
  EXPECT_LE(rep.max_fluct_norm, 2.0 * g * (1 + 1e-12));
}

TEST(Diagnostics, QuietRunHasZeroAccumulator) {
  Problem prob = Problem::build(quadratic_set({Vector::Constant(2, 0.3), Vector::Constant(2, -0.1)}),
                                uniform_complete(2));
  RunRecord r = run_clipped(prob, first_step(0.1, 100.0, 100), RunOptions{});
  DiagnosticTrace tr = diagnostics(r, 0.1);
  for (double a : tr.theta_acc) EXPECT_EQ(a, 0.0);
  EXPECT_FALSE(tr.exceeded_statement);
  EXPECT_NEAR(tr.threshold_statement, 1.25 * r.delta1 + std::log(10.0), 1e-15);
  EXPECT_NEAR(tr.threshold_induction, 2.25 * r.delta1 + std::log(10.0), 1e-15);
  for (std::size_t k = 1; k < tr.z.size(); ++k) EXPECT_LE(tr.z[k], tr.z[k - 1]);
  EXPECT_GT(tr.cumulative_gap_bound, 0.0);
  EXPECT_THROW(diagnostics(r, 1.5), Error);
}

TEST(Quantiles, NearestRank) {
  EXPECT_EQ(nearest_rank_quantile({3, 1, 2}, 0.0), 1);
  EXPECT_EQ(nearest_rank_quantile({3, 1, 2}, 0.5), 2);
  EXPECT_EQ(nearest_rank_quantile({3, 1, 2}, 1.0), 3);
  EXPECT_EQ(nearest_rank_quantile({4, 1, 3, 2}, 0.5), 2);
  EXPECT_THROW(nearest_rank_quantile({}, 0.5), Error);
  EXPECT_THROW(nearest_rank_quantile({1.0}, 1.5), Error);
}

TEST(Quantiles, EnsembleCurves) {
  const Problem prob = desk_problem(6, 8);
  const ScheduleParams params = example1(200);
  std::vector<RunRecord> same(10, run_clipped(prob, params, RunOptions{}));
  QuantileCurve med = ensemble_quantiles(same, 0.5, metric_selector("run_avg_gap"));
  for (std::size_t k = 0; k < med.value.size(); ++k) EXPECT_EQ(med.value[k], same[0].rows[k].run_avg_gap);

  std::vector<RunRecord> recs = run_ensemble(prob, params, RunOptions{}, 1, 12, 2);
  QuantileCurve mx = ensemble_quantiles(recs, 1.0, metric_selector("fbar_gap"));
  for (std::size_t k = 0; k < mx.value.size(); ++k) {
    double expect = 0.0;
    for (const auto& r : recs) expect = std::max(expect, r.rows[k].fbar_gap);
    EXPECT_EQ(mx.value[k], expect);
  }
  EXPECT_THROW(ensemble_quantiles(std::vector<RunRecord>(recs.begin(), recs.begin() + 9), 0.5,
                                  metric_selector("fbar_gap")),
               Error);
  recs[3] = run_clipped(prob, example1(100), RunOptions{});
  EXPECT_THROW(ensemble_quantiles(recs, 0.5, metric_selector("fbar_gap")), Error);
  EXPECT_THROW(metric_selector("nope"), Error);
}

TEST(Quantiles, UpperRunningGapDecreasesOnDeskRuns) {
  const Problem prob = desk_problem(20, 50);
  std::vector<RunRecord> recs = run_ensemble(prob, example1(2000), RunOptions{}, 1, 50, 4);
  QuantileCurve q9 = ensemble_quantiles(recs, 0.9, metric_selector("run_avg_gap"));
  for (double v : q9.value) EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(q9.value.back(), q9.value.front());
}

}  // namespace
}  // namespace hclip
