// SPDX-License-Identifier: Apache-2.0
#include "hclip/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hclip/errors.hpp"

namespace hclip {

Vector clip(const Vector& y, double threshold) {
  Vector out = y;
  clip_in_place(std::span<double>(out.data(), static_cast<std::size_t>(out.size())), threshold);
  return out;
}

bool clip_in_place(std::span<double> y, double threshold) {
  if (!(threshold > 0.0)) fail(ErrorKind::invalid_argument, "clip threshold must be positive");
  double sq = 0.0;
  for (double v : y) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= threshold) return false;
  const double factor = threshold / norm;
  for (double& v : y) v *= factor;
  return true;
}

void ScheduleParams::validate() const {
  if (!(m > 0.0)) fail(ErrorKind::invalid_argument, "m must be positive");
  if (!(b1 > 0.0)) fail(ErrorKind::invalid_argument, "b1 must be positive");
  if (!(kappa >= 0.0)) fail(ErrorKind::invalid_argument, "kappa must be nonnegative");
  if (!(alpha >= 0.0)) fail(ErrorKind::invalid_argument, "alpha must be nonnegative");
  if (!(lambda > 0.0)) fail(ErrorKind::invalid_argument, "lambda must be positive");
  if (horizon < 1) fail(ErrorKind::invalid_argument, "horizon must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::invalid_argument, "delta must lie in (0,1)");
}

double ScheduleParams::step_size(std::int64_t t) const {
  if (t < 1) fail(ErrorKind::invalid_argument, "time index must be >= 1");
  const double tt = static_cast<double>(t);
  const double offset = std::log(tt) + b1;
  return 1.0 / (m * offset * offset * std::pow(tt, kappa));
}

double ScheduleParams::clip_threshold(std::int64_t t) const {
  if (t < 1) fail(ErrorKind::invalid_argument, "time index must be >= 1");
  return lambda * std::pow(static_cast<double>(t), alpha);
}

double ScheduleParams::a0() const { return std::max(1.0, std::log(1.0 / delta)); }

ScheduleParams ScheduleParams::example1() {
  return ScheduleParams{0.75, 0.25, 0.2, 1.0, 2.0, 2000, 0.1};
}

ScheduleParams ScheduleParams::example2() {
  return ScheduleParams{0.75, 0.25, 35.0, 4.0, 100.0, 2000, 0.1};
}

namespace {

constexpr double kExponentSlack = 1e-12;

// E1(x) = -Ei(-x) for x > 0.
double exp_integral_e1(double x) { return -std::expint(-x); }

// Integral of t^-s (1 + log t)^-2 over [M, inf), s >= 1.
double series_tail(double s, double cutoff) {
  const double lm = 1.0 + std::log(cutoff);
  if (s == 1.0) return 1.0 / lm;
  // With u = 1 + log t: e^{c} * int_{lm}^inf e^{-c u} / u^2 du, c = s - 1,
  // and int_A^inf e^{-cu}/u^2 du = e^{-cA}/A - c E1(cA).
  const double c = s - 1.0;
  const double ca = c * lm;
  if (ca > 700.0) {
    // e^{c} e^{-cA}/A dominates and underflows to zero anyway.
    return 0.0;
  }
  const double value = std::exp(c) * (std::exp(-ca) / lm - c * exp_integral_e1(ca));
  return std::max(value, 0.0);
}

}  // namespace

SeriesValue series_constant(double a, double b, double tol) {
  if (!(tol > 0.0)) fail(ErrorKind::invalid_argument, "tolerance must be positive");
  double s = b - a;
  // Exponent pairs chosen to sit exactly on s = 1 land a rounding error away.
  if (s < 1.0 && s >= 1.0 - kExponentSlack) s = 1.0;
  if (!(s >= 1.0)) {
    fail(ErrorKind::divergent_series, fmt::format("C_(a,b) diverges for b - a = {} < 1", s));
  }
  std::int64_t cutoff = 1000000;
  double partial = 0.0;
  std::int64_t summed = 0;
  for (;;) {
    // Sum from the smallest term up to limit cancellation in the partial sum.
    double chunk = 0.0;
    for (std::int64_t t = cutoff; t > summed; --t) {
      const double tt = static_cast<double>(t);
      const double lg = std::log(tt) + 1.0;
      chunk += 1.0 / (std::pow(tt, s) * lg * lg);
    }
    partial += chunk;
    summed = cutoff;
    // Decreasing terms: integral over [M+1, inf) <= tail <= integral over [M, inf).
    const double lower_tail = series_tail(s, static_cast<double>(cutoff + 1));
    const double upper_tail = series_tail(s, static_cast<double>(cutoff));
    const double rounding = 4.0 * std::numeric_limits<double>::epsilon() * partial;
    SeriesValue out;
    out.lower = partial + lower_tail - rounding;
    out.upper = partial + upper_tail + rounding;
    out.value = 0.5 * (out.lower + out.upper);
    out.cutoff = cutoff;
    if (0.5 * (out.upper - out.lower) <= tol || cutoff >= 100000000) {
      if (0.5 * (out.upper - out.lower) > tol) {
        fail(ErrorKind::invalid_argument, fmt::format("cannot certify C_(a,b) to {} within the cutoff cap", tol));
      }
      return out;
    }
    cutoff *= 10;
  }
}

bool ConditionReport::feasible() const noexcept {
  return std::all_of(lines.begin(), lines.end(), [](const ConditionLine& l) { return l.pass; });
}

bool ConditionReport::practical_feasible() const noexcept {
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (k != 1 && !lines[k].pass) return false;
  }
  return true;
}

std::string ConditionReport::digest() const {
  std::string out = fmt::format("feasible={} practical={}", feasible() ? 1 : 0, practical_feasible() ? 1 : 0);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    out += fmt::format(" line{}={}", k + 1, lines[k].divergent ? "divergent" : (lines[k].pass ? "pass" : "fail"));
  }
  return out;
}

std::string ConditionReport::to_text() const {
  std::string out;
  out += fmt::format("gamma = {:.10g}\nbeta = {:.10g}\nA = {:.10g}\nE = {:.10g}\nD = {:.10g}\na0 = {:.10g}\n",
                     inputs.gamma, inputs.beta, A, E, D, a0);
  out += fmt::format("L = {:.10g}\nB* = {:.10g}\nsigma = {:.10g}\np = {:.10g}\nDelta1 = {:.10g}\nR1 = {:.10g}\n",
                     inputs.smoothness, inputs.b_star, inputs.sigma, inputs.p, inputs.delta1, inputs.r1);
  out += fmt::format("C(2a,3k) = {:.10g}\nC(2a,2k) = {:.10g}\nC((1-p)a,k) = {:.10g}\n", c_2a_3k, c_2a_2k, c_1mpa_k);
  out += fmt::format("m >= 1: {}\nb1 >= 1: {}\n", m_at_least_one ? "yes" : "no", b1_at_least_one ? "yes" : "no");
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& l = lines[k];
    out += fmt::format("line {} [{}]: {} (lhs = {:.10g}, rhs = {:.10g}, margin = {:.6g}){}\n", k + 1, l.name,
                       l.pass ? "pass" : "FAIL", l.lhs, l.rhs, l.margin, l.divergent ? " divergent series" : "");
  }
  out += fmt::format("strict verdict: {}\npractical verdict (line 2 skipped): {}\n",
                     feasible() ? "feasible" : "infeasible", practical_feasible() ? "feasible" : "infeasible");
  return out;
}

namespace {

struct SeriesTriple {
  double c_2a_3k = std::numeric_limits<double>::infinity();
  double c_2a_2k = std::numeric_limits<double>::infinity();
  double c_1mpa_k = std::numeric_limits<double>::infinity();
  bool div_2a_3k = true;
  bool div_2a_2k = true;
  bool div_1mpa_k = true;
};

SeriesTriple series_for(const ScheduleParams& params, double p) {
  SeriesTriple s;
  auto eval = [](double a, double b, double& value, bool& divergent) {
    if (b - a >= 1.0 - kExponentSlack) {
      value = series_constant(a, b, 1e-9).upper;
      divergent = false;
    }
  };
  eval(2.0 * params.alpha, 3.0 * params.kappa, s.c_2a_3k, s.div_2a_3k);
  eval(2.0 * params.alpha, 2.0 * params.kappa, s.c_2a_2k, s.div_2a_2k);
  eval((1.0 - p) * params.alpha, params.kappa, s.c_1mpa_k, s.div_1mpa_k);
  return s;
}

double network_bound(const ProblemConstants& c, double lambda, double m) {
  const double n = static_cast<double>(c.n_agents);
  return n * c.gamma * c.r1 + n * c.gamma * lambda / ((1.0 - c.beta) * m);
}

ConditionReport check_with_series(const ScheduleParams& params, const ProblemConstants& c,
                                  const SeriesTriple& s);

}  // namespace

ConditionReport check_condition7(const ScheduleParams& params, const ProblemConstants& c) {
  params.validate();
  if (!(c.p > 1.0 && c.p <= 2.0)) fail(ErrorKind::invalid_argument, "p must lie in (1, 2]");
  return check_with_series(params, c, series_for(params, c.p));
}

namespace {

ConditionReport check_with_series(const ScheduleParams& params, const ProblemConstants& c,
                                  const SeriesTriple& s) {
  params.validate();
  if (!(c.p > 1.0 && c.p <= 2.0)) fail(ErrorKind::invalid_argument, "p must lie in (1, 2]");
  if (!(c.beta > 0.0 && c.beta < 1.0) || !(c.gamma > 0.0)) {
    fail(ErrorKind::invalid_argument, "graph constants out of range");
  }
  ConditionReport r;
  r.inputs = c;
  const double n = static_cast<double>(c.n_agents);
  const double rho = 1.0 / (1.0 - c.beta);
  const double m = params.m;
  const double lambda = params.lambda;
  const double p = c.p;
  r.A = 4.0 * c.smoothness * n * n * c.gamma * c.gamma * rho * rho;
  r.E = 4.0 * c.smoothness * rho * n * n * c.gamma * c.gamma * c.r1 * c.r1;
  r.D = network_bound(c, lambda, m);
  r.a0 = params.a0();
  r.m_at_least_one = m >= 1.0;
  r.b1_at_least_one = params.b1 >= 1.0;

  r.c_2a_3k = s.c_2a_3k;
  r.c_2a_2k = s.c_2a_2k;
  r.c_1mpa_k = s.c_1mpa_k;

  auto ge = [](ConditionLine& line, double lhs, double rhs) {
    line.lhs = lhs;
    line.rhs = rhs;
    line.margin = lhs - rhs;
    line.pass = std::isfinite(lhs) && std::isfinite(rhs) && lhs >= rhs;
  };

  ConditionLine& l1 = r.lines[0];
  l1.name = "kappa >= max{alpha + 1/2, 1 - (p-1) alpha}";
  ge(l1, params.kappa, std::max(params.alpha + 0.5, 1.0 - (p - 1.0) * params.alpha));
  // Exact equality sits on the boundary; tolerate rounding in the exponents.
  if (!l1.pass && l1.margin >= -kExponentSlack) l1.pass = true;

  ConditionLine& l2 = r.lines[1];
  l2.name = "A C(2a,3k) lambda^2 + (C(2a,2k) N + E m) m <= m^3 Delta1^2";
  l2.divergent = s.div_2a_3k || s.div_2a_2k;
  {
    double lhs = r.A * s.c_2a_3k * lambda * lambda + (s.c_2a_2k * n + r.E * m) * m;
    double rhs = m * m * m * c.delta1 * c.delta1;
    // Oriented so that margin >= 0 means pass.
    ge(l2, rhs, lhs);
    std::swap(l2.lhs, l2.rhs);
    if (l2.divergent) l2.pass = false;
  }

  ConditionLine& l3 = r.lines[2];
  l3.name = "lambda >= 2L(9 Delta1 + 5 a0) + 2 L D + 2 B*";
  ge(l3, lambda, 2.0 * c.smoothness * (9.0 * c.delta1 + 5.0 * r.a0) + 2.0 * c.smoothness * r.D + 2.0 * c.b_star);

  ConditionLine& l4 = r.lines[3];
  l4.name = "m >= Delta1^-1 lambda^(1-p) sigma^p C((1-p)a,k)";
  l4.divergent = s.div_1mpa_k;
  ge(l4, m, std::pow(lambda, 1.0 - p) * std::pow(c.sigma, p) * s.c_1mpa_k / c.delta1);
  if (l4.divergent) l4.pass = false;

  ConditionLine& l5 = r.lines[4];
  l5.name = "m >= 6 Delta1^-0.5 lambda^(1-p/2) sigma^(p/2) C(2a,2k)^0.5";
  l5.divergent = s.div_2a_2k;
  ge(l5, m, 6.0 * std::pow(c.delta1, -0.5) * std::pow(lambda, 1.0 - p / 2.0) * std::pow(c.sigma, p / 2.0) *
                std::sqrt(s.c_2a_2k));
  if (l5.divergent) l5.pass = false;
  return r;
}

}  // namespace

ScheduleParams suggest_params(const ProblemConstants& c, double delta, std::int64_t horizon, double b1) {
  if (!(c.delta1 > 0.0)) fail(ErrorKind::infeasible_constants, "Delta1 = 0 makes lines 2, 4, 5 unsatisfiable");
  ScheduleParams params;
  params.alpha = 1.0 / (2.0 * c.p);
  params.kappa = 0.5 + 1.0 / (2.0 * c.p);
  params.b1 = b1;
  params.delta = delta;
  params.horizon = horizon;
  params.validate();
  if (!(c.p > 1.0 && c.p <= 2.0)) fail(ErrorKind::invalid_argument, "p must lie in (1, 2]");
  const SeriesTriple series = series_for(params, c.p);

  const double n = static_cast<double>(c.n_agents);
  // Line 3 reads lambda >= c0 + c1 lambda / m once D is expanded.
  const double a0 = params.a0();
  const double c0 = 2.0 * c.smoothness * (9.0 * c.delta1 + 5.0 * a0) + 2.0 * c.smoothness * n * c.gamma * c.r1 +
                    2.0 * c.b_star;
  const double c1 = 2.0 * c.smoothness * n * c.gamma / (1.0 - c.beta);
  constexpr double kCap = 1152921504606846976.0;  // 2^60

  auto next_pow2 = [](double x) {
    double v = 1.0;
    while (v < x) v *= 2.0;
    return v;
  };

  // m >= 2 c1 keeps lambda within a factor 2 of c0; a larger m only shrinks
  // D, so line 3 stays satisfied when m grows afterwards.
  double m_floor = next_pow2(std::max(1.0, 2.0 * c1));
  if (m_floor > kCap) fail(ErrorKind::infeasible_constants, "network term needs m beyond 2^60");
  params.m = m_floor;
  params.lambda = 1.0;
  for (int iter = 0; iter < 20; ++iter) {
    double lambda = 1.0;
    while (lambda < c0 + c1 * lambda / params.m) {
      lambda *= 2.0;
      if (lambda > kCap) fail(ErrorKind::infeasible_constants, "no lambda <= 2^60 satisfies line 3");
    }
    params.lambda = lambda;
    double m = m_floor;
    for (;;) {
      params.m = m;
      ConditionReport r = check_with_series(params, c, series);
      if (r.lines[1].pass && r.lines[3].pass && r.lines[4].pass) break;
      if (r.lines[1].divergent || r.lines[3].divergent || r.lines[4].divergent) {
        fail(ErrorKind::infeasible_constants, "a series constant diverges");
      }
      m *= 2.0;
      if (m > kCap) fail(ErrorKind::infeasible_constants, "no m <= 2^60 satisfies lines 2, 4 and 5");
    }
    ConditionReport r = check_with_series(params, c, series);
    if (r.feasible()) return params;
    m_floor = params.m;
  }
  fail(ErrorKind::infeasible_constants, "lambda/m search did not reach a fixed point");
}

}  // namespace hclip
