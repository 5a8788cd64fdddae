// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "hclip/graph_schedule.hpp"
#include "hclip/types.hpp"

namespace hclip {

/// min{1, threshold/||y||} y. A zero vector is returned unchanged.
Vector clip(const Vector& y, double threshold);

/// In-place clip; returns true when the vector was rescaled.
bool clip_in_place(std::span<double> y, double threshold);

/// eta_t = 1 / (m (log t + b1)^2 t^kappa), lambda_t = lambda t^alpha.
struct ScheduleParams {
  double kappa = 0.75;
  double alpha = 0.25;
  double m = 1.0;
  double b1 = 1.0;
  double lambda = 1.0;
  std::int64_t horizon = 1;
  double delta = 0.1;

  void validate() const;
  double step_size(std::int64_t t) const;
  double clip_threshold(std::int64_t t) const;
  /// max{1, log(1/delta)}
  double a0() const;

  bool operator==(const ScheduleParams&) const = default;

  /// eta_t = 5/(t^0.75 (1+log t)^2), lambda_t = 2 t^0.25, T = 2000.
  static ScheduleParams example1();
  /// eta_t = 1/(35 t^0.75 (4+log t)^2), lambda_t = 100 t^0.25, T = 2000.
  static ScheduleParams example2();
};

/// C_{a,b} = sum_{t>=1} 1 / (t^(b-a) (log t + 1)^2) with a certified enclosure.
struct SeriesValue {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t cutoff = 0;
};

/// Throws divergent-series when b - a < 1.
SeriesValue series_constant(double a, double b, double tol = 1e-9);

/// Input constants for the feasibility check. All of them are measured
/// quantities: gamma/beta from the graph, the rest from the objective, the
/// noise declaration and the actual initial states.
struct ProblemConstants {
  double gamma = 0.0;
  double beta = 0.0;
  int n_agents = 1;
  double smoothness = 0.0;
  double b_star = 0.0;
  double sigma = 0.0;
  double p = 2.0;
  double delta1 = 0.0;
  double r1 = 0.0;
};

struct ConditionLine {
  std::string name;
  bool pass = false;
  bool divergent = false;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Positive when satisfied (rhs side minus lhs side, oriented so that
  /// margin >= 0 means pass).
  double margin = 0.0;
};

struct ConditionReport {
  ProblemConstants inputs;
  double A = 0.0;
  double E = 0.0;
  double D = 0.0;
  double a0 = 0.0;
  double c_2a_3k = 0.0;
  double c_2a_2k = 0.0;
  double c_1mpa_k = 0.0;
  bool m_at_least_one = false;
  bool b1_at_least_one = false;
  std::array<ConditionLine, 5> lines;

  bool feasible() const noexcept;
  /// Skips the second line, which needs global graph information.
  bool practical_feasible() const noexcept;
  std::string digest() const;
  std::string to_text() const;
};

ConditionReport check_condition7(const ScheduleParams& params, const ProblemConstants& constants);

/// Boundary exponents (1/3, 5/6), then the smallest power-of-two lambda and m making
/// every line pass. Throws infeasible-constants when no m <= 2^60 works.
ScheduleParams suggest_params(const ProblemConstants& constants, double delta, std::int64_t horizon,
                              double b1 = 1.0);

}  // namespace hclip
