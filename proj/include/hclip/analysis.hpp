// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hclip/engine.hpp"

namespace hclip {

inline constexpr double kBoundTol = 1e-9;
inline constexpr double kMonteCarloSlack = 1.2;

struct BoundPoint {
  std::int64_t t = 0;
  /// Worst agent at this t: largest observed - bound.
  int agent = 0;
  double observed = 0.0;
  double bound = 0.0;
};

struct BoundCheckReport {
  std::string name;
  double tolerance = kBoundTol;
  std::vector<BoundPoint> points;
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::int64_t worst_t = 0;
  int worst_agent = 0;

  bool pass() const noexcept { return violations == 0; }
  std::string summary() const;
};

/// Consensus error vs N gamma beta^t R1 + N gamma sum_{l<=t} beta^(t-l) lambda_l eta_l,
/// using the run's own constants. The bound for x_{i,1} is the t = 0 form.
BoundCheckReport check_lemma2(const RunRecord& record, const ContractionConstants& constants);
BoundCheckReport check_lemma2(const RunRecord& record, const Problem& problem);

/// ||grad f_i(x_i)|| vs L ||x_i - xbar|| + L ||xbar - x*|| + ||grad f_i(x*)||.
struct Eq6Report {
  BoundCheckReport bounds;
  /// ||grad f_i(x_{i,t})|| <= lambda_t / 2 for every recorded (i, t).
  bool half_threshold_held = true;
  std::int64_t first_half_threshold_miss = 0;
};

Eq6Report check_eq6(const RunRecord& record, const Problem& problem);

struct Lemma5Report {
  std::int64_t n_samples = 0;
  double lambda = 0.0;
  double grad_norm = 0.0;
  bool grad_condition = false;
  double bias_norm = 0.0;
  double bias_bound = 0.0;
  double fluct_second_moment = 0.0;
  double fluct_bound = 0.0;
  double max_fluct_norm = 0.0;
  bool cap_held = true;
  bool bias_ok = true;
  bool fluct_ok = true;

  bool pass() const noexcept { return cap_held && bias_ok && fluct_ok; }
  std::string summary() const;
};

/// Monte Carlo split of clip(grad + noise) - grad into its sample mean
/// (bias) and the residual (fluctuation) at a frozen point. The moment
/// bounds are only asserted when ||grad|| <= lambda / 2.
Lemma5Report check_lemma5_monte_carlo(const ObjectiveSet& objectives, int agent, const Vector& point,
                                      const NoiseModel& noise, double lambda, std::int64_t n_samples,
                                      std::uint64_t seed);

struct DiagnosticTrace {
  std::vector<std::int64_t> t;
  std::vector<double> z;
  std::vector<double> delta;
  std::vector<double> run_avg_gap;
  std::vector<double> theta_acc;
  /// Per (row, agent), same layout as RunRecord.
  std::vector<double> theta_norm;
  double a0 = 1.0;
  double delta1 = 0.0;
  /// 5 delta1 / 4 + log(1/delta)
  double threshold_statement = 0.0;
  /// 9 delta1 / 4 + a0
  double threshold_induction = 0.0;
  double max_theta_acc = 0.0;
  bool exceeded_statement = false;
  bool exceeded_induction = false;
  /// sum_t (f(xbar_t) - f*) against 9/(2 eta_T) delta1^2 + log^2(1/delta) / eta_T.
  double cumulative_gap = 0.0;
  double cumulative_gap_bound = 0.0;
};

DiagnosticTrace diagnostics(const RunRecord& record, double delta);

/// Order statistic: the ceil(q n)-th smallest (q = 0 gives the minimum).
double nearest_rank_quantile(std::vector<double> values, double q);

using MetricSelector = std::function<double(const RunRow&)>;

MetricSelector metric_selector(const std::string& name);

struct QuantileCurve {
  double q = 0.5;
  std::vector<std::int64_t> t;
  std::vector<double> value;
};

/// Pointwise quantile of a metric across at least ten records sharing T
/// and stride.
QuantileCurve ensemble_quantiles(const std::vector<RunRecord>& records, double q, const MetricSelector& metric);

}  // namespace hclip
