// SPDX-License-Identifier: Apache-2.0
#include "hclip/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hclip/errors.hpp"
#include "hclip/random.hpp"

namespace hclip {

namespace {

void require_full_resolution(const RunRecord& record, const char* what) {
  if (record.stride != 1) {
    fail(ErrorKind::insufficient_resolution,
         fmt::format("{} needs every iterate; record has stride {}", what, record.stride));
  }
  for (std::size_t r = 0; r < record.rows.size(); ++r) {
    if (record.rows[r].t != static_cast<std::int64_t>(r) + 1) {
      fail(ErrorKind::insufficient_resolution, fmt::format("{}: row {} is t = {}", what, r, record.rows[r].t));
    }
  }
}

void tally(BoundCheckReport& rep, std::int64_t t, int agent, double observed, double bound, BoundPoint& row_worst) {
  const double margin = observed - bound;
  ++rep.checked;
  if (margin > rep.tolerance) ++rep.violations;
  if (margin > rep.worst_margin) {
    rep.worst_margin = margin;
    rep.worst_t = t;
    rep.worst_agent = agent;
  }
  if (margin > row_worst.observed - row_worst.bound) row_worst = BoundPoint{t, agent, observed, bound};
}

}  // namespace

std::string BoundCheckReport::summary() const {
  return fmt::format("{}: {} checked, {} violations, worst margin {:.6g} at t = {} agent {} (tol {:g})", name,
                     checked, violations, worst_margin, worst_t, worst_agent, tolerance);
}

BoundCheckReport check_lemma2(const RunRecord& record, const ContractionConstants& constants) {
  require_full_resolution(record, "network error check");
  if (record.mode != Mode::clipped) {
    fail(ErrorKind::invalid_argument, "network error bound needs clipped gradients; record is a baseline run");
  }
  BoundCheckReport rep;
  rep.name = "network-error";
  const double ng = static_cast<double>(record.n_agents) * constants.gamma;
  double series = 0.0;  // sum_{l<=tau} beta^(tau-l) lambda_l eta_l
  double beta_pow = 1.0;
  for (std::size_t r = 0; r < record.rows.size(); ++r) {
    // Row r holds x_{i, tau+1} with tau = r.
    if (r > 0) {
      const RunRow& prev = record.rows[r - 1];
      series = constants.beta * series + prev.lambda * prev.eta;
      beta_pow *= constants.beta;
    }
    const double bound = ng * beta_pow * record.r1 + ng * series;
    BoundPoint worst{record.rows[r].t, 0, 0.0, std::numeric_limits<double>::infinity()};
    for (int i = 0; i < record.n_agents; ++i) {
      tally(rep, record.rows[r].t, i, record.at(record.deviation, r, i), bound, worst);
    }
    rep.points.push_back(worst);
  }
  return rep;
}

BoundCheckReport check_lemma2(const RunRecord& record, const Problem& problem) {
  return check_lemma2(record, contraction_constants(problem.schedule));
}

Eq6Report check_eq6(const RunRecord& record, const Problem& problem) {
  require_full_resolution(record, "gradient bound check");
  Eq6Report out;
  BoundCheckReport& rep = out.bounds;
  rep.name = "gradient-bound";
  const double L = problem.optimum.smoothness;
  const auto& local_star = problem.optimum.local_grad_norms;
  if (static_cast<int>(local_star.size()) != record.n_agents) {
    fail(ErrorKind::malformed_input, "record and problem disagree on the number of agents");
  }
  for (std::size_t r = 0; r < record.rows.size(); ++r) {
    const RunRow& row = record.rows[r];
    BoundPoint worst{row.t, 0, 0.0, std::numeric_limits<double>::infinity()};
    for (int i = 0; i < record.n_agents; ++i) {
      const double g = record.at(record.exact_grad_norm, r, i);
      const double bound = L * record.at(record.deviation, r, i) + L * row.delta + local_star[static_cast<std::size_t>(i)];
      tally(rep, row.t, i, g, bound, worst);
      if (out.half_threshold_held && g > 0.5 * row.lambda) {
        out.half_threshold_held = false;
        out.first_half_threshold_miss = row.t;
      }
    }
    rep.points.push_back(worst);
  }
  return out;
}

std::string Lemma5Report::summary() const {
  return fmt::format(
      "clip split at lambda {:.6g} (|grad| {:.6g}, condition {}), {} samples: cap {:.6g} <= {:.6g} {}; "
      "bias {:.6g} vs {:.6g} {}; second moment {:.6g} vs {:.6g} {}",
      lambda, grad_norm, grad_condition ? "held" : "not held", n_samples, max_fluct_norm, 2.0 * lambda,
      cap_held ? "ok" : "FAIL", bias_norm, kMonteCarloSlack * bias_bound, bias_ok ? "ok" : "FAIL",
      fluct_second_moment, kMonteCarloSlack * fluct_bound, fluct_ok ? "ok" : "FAIL");
}

Lemma5Report check_lemma5_monte_carlo(const ObjectiveSet& objectives, int agent, const Vector& point,
                                      const NoiseModel& noise, double lambda, std::int64_t n_samples,
                                      std::uint64_t seed) {
  if (n_samples < 10000) fail(ErrorKind::invalid_argument, "clip split needs at least 10^4 samples");
  if (!(lambda > 0.0)) fail(ErrorKind::invalid_argument, "clip threshold must be positive");
  if (point.size() != objectives.dim()) fail(ErrorKind::malformed_input, "point dimension mismatch");
  const int d = objectives.dim();
  const Vector grad = objectives.exact_gradient(agent, point);
  Lemma5Report rep;
  rep.n_samples = n_samples;
  rep.lambda = lambda;
  rep.grad_norm = grad.norm();
  rep.grad_condition = rep.grad_norm <= 0.5 * lambda;

  // Two passes over the same counter-based draws: the mean, then residuals.
  Vector draw(d);
  auto clipped_draw = [&](std::int64_t k) {
    draw = grad;
    if (noise.kind != NoiseKind::none) {
      Stream rng = substream(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(agent),
                             StreamDomain::monte_carlo);
      Vector xi = sample(noise, d, rng);
      draw += xi;
    }
    clip_in_place(std::span<double>(draw.data(), static_cast<std::size_t>(d)), lambda);
  };
  Vector mean = Vector::Zero(d);
  if (noise.kind == NoiseKind::none) {
    // Every draw is the same vector; averaging would only add rounding.
    clipped_draw(0);
    mean = draw;
  } else {
    for (std::int64_t k = 0; k < n_samples; ++k) {
      clipped_draw(k);
      mean += draw;
    }
    mean /= static_cast<double>(n_samples);
  }
  double sq_sum = 0.0;
  double max_norm = 0.0;
  for (std::int64_t k = 0; k < n_samples; ++k) {
    clipped_draw(k);
    const double nrm = (draw - mean).norm();
    sq_sum += nrm * nrm;
    max_norm = std::max(max_norm, nrm);
  }
  rep.bias_norm = (mean - grad).norm();
  rep.fluct_second_moment = sq_sum / static_cast<double>(n_samples);
  rep.max_fluct_norm = max_norm;
  const double sp = noise.kind == NoiseKind::none ? 0.0 : std::pow(noise.sigma, noise.p);
  const double p = noise.kind == NoiseKind::none ? 2.0 : noise.p;
  rep.bias_bound = 4.0 * sp * std::pow(lambda, 1.0 - p);
  rep.fluct_bound = 16.0 * sp * std::pow(lambda, 2.0 - p);
  rep.cap_held = max_norm <= 2.0 * lambda * (1.0 + 1e-12);
  if (rep.grad_condition) {
    rep.bias_ok = rep.bias_norm <= kMonteCarloSlack * rep.bias_bound + 1e-12;
    rep.fluct_ok = rep.fluct_second_moment <= kMonteCarloSlack * rep.fluct_bound + 1e-12;
  }
  return rep;
}

DiagnosticTrace diagnostics(const RunRecord& record, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::invalid_argument, "delta must lie in (0, 1)");
  DiagnosticTrace tr;
  const double log_inv = std::log(1.0 / delta);
  tr.a0 = std::max(1.0, log_inv);
  tr.delta1 = record.delta1;
  tr.threshold_statement = 1.25 * record.delta1 + log_inv;
  tr.threshold_induction = 2.25 * record.delta1 + tr.a0;
  tr.theta_norm = record.theta_norm;
  for (const RunRow& row : record.rows) {
    tr.t.push_back(row.t);
    tr.z.push_back(row.z);
    tr.delta.push_back(row.delta);
    tr.run_avg_gap.push_back(row.run_avg_gap);
    tr.theta_acc.push_back(row.theta_acc);
    tr.max_theta_acc = std::max(tr.max_theta_acc, row.theta_acc);
  }
  tr.exceeded_statement = tr.max_theta_acc > tr.threshold_statement;
  tr.exceeded_induction = tr.max_theta_acc > tr.threshold_induction;
  if (!record.rows.empty()) {
    const RunRow& last = record.rows.back();
    tr.cumulative_gap = last.run_avg_gap * static_cast<double>(last.t);
    tr.cumulative_gap_bound =
        4.5 / last.eta * record.delta1 * record.delta1 + log_inv * log_inv / last.eta;
  }
  return tr;
}

double nearest_rank_quantile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorKind::invalid_argument, "quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorKind::invalid_argument, fmt::format("quantile {} outside [0, 1]", q));
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

MetricSelector metric_selector(const std::string& name) {
  if (name == "fbar_gap") return [](const RunRow& r) { return r.fbar_gap; };
  if (name == "run_avg_gap") return [](const RunRow& r) { return r.run_avg_gap; };
  if (name == "consensus_max") return [](const RunRow& r) { return r.consensus_max; };
  if (name == "z_t") return [](const RunRow& r) { return r.z; };
  if (name == "delta_t") return [](const RunRow& r) { return r.delta; };
  if (name == "theta_acc") return [](const RunRow& r) { return r.theta_acc; };
  fail(ErrorKind::invalid_argument, fmt::format("unknown metric '{}'", name));
}

QuantileCurve ensemble_quantiles(const std::vector<RunRecord>& records, double q, const MetricSelector& metric) {
  if (records.size() < 10) {
    fail(ErrorKind::invalid_argument, fmt::format("quantiles need at least 10 records, got {}", records.size()));
  }
  const RunRecord& first = records.front();
  for (const RunRecord& r : records) {
    if (r.params.horizon != first.params.horizon || r.stride != first.stride || r.rows.size() != first.rows.size()) {
      fail(ErrorKind::invalid_argument, "records differ in horizon or stride");
    }
  }
  QuantileCurve curve;
  curve.q = q;
  std::vector<double> column(records.size());
  for (std::size_t row = 0; row < first.rows.size(); ++row) {
    for (std::size_t k = 0; k < records.size(); ++k) column[k] = metric(records[k].rows[row]);
    curve.t.push_back(first.rows[row].t);
    curve.value.push_back(nearest_rank_quantile(column, q));
  }
  return curve;
}

}  // namespace hclip
