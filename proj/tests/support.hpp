// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "hclip/engine.hpp"
#include "hclip/objectives.hpp"

namespace hclip::testing {

/// f_i(x) = 0.5 ||x - c_i||^2 in `dim` coordinates, one "sample" per
/// coordinate so the gram matrix is I / dim; scaled features keep it I.
inline LocalObjective shifted_quadratic(const Vector& center) {
  const auto d = center.size();
  Matrix x = Matrix::Identity(d, d) * std::sqrt(static_cast<double>(d));
  Vector y = center * std::sqrt(static_cast<double>(d));
  return LocalObjective(std::move(x), std::move(y), 0.0);
}

inline ObjectiveSet quadratic_set(const std::vector<Vector>& centers, NoiseModel noise = NoiseModel::none()) {
  std::vector<LocalObjective> locals;
  for (const auto& c : centers) locals.push_back(shifted_quadratic(c));
  return ObjectiveSet(std::move(locals), noise);
}

/// Step size eta_1 = 1 / m at t = 1 (b1 = 1), lambda_1 = lambda.
inline ScheduleParams first_step(double eta1, double lambda1, std::int64_t horizon) {
  ScheduleParams p;
  p.m = 1.0 / eta1;
  p.b1 = 1.0;
  p.lambda = lambda1;
  p.horizon = horizon;
  return p;
}


}  // namespace hclip::testing
