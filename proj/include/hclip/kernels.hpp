// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "hclip/objectives.hpp"
#include "hclip/types.hpp"

// Per-iteration kernels of the distributed clipped SGD round. Every kernel
// has a plain serial reference and an OpenMP version over agents; both
// perform the same floating-point operations in the same order per agent,
// so their outputs agree bit for bit.
namespace hclip::kernels {

enum class Exec { serial, parallel };

struct LocalStepConfig {
  double eta = 0.0;
  double lambda = 0.0;
  bool clip = true;
  std::uint64_t seed = 0;
  std::int64_t t = 1;
};

struct AgentStats {
  double exact_norm = 0.0;
  double noisy_norm = 0.0;
  double used_norm = 0.0;
  double theta_norm = 0.0;
  /// <theta_i, xbar - x*>
  double theta_dot = 0.0;
  bool clipped = false;
};

/// Inputs shared by every agent in one local step.
struct LocalStepInputs {
  const ObjectiveSet& objectives;
  const LocalStepConfig& config;
  /// x_t, one row per agent; gradients are evaluated here.
  const StateMatrix& x;
  /// Post-mix states y_t.
  const StateMatrix& y;
  /// xbar_t - x*.
  const Vector& centered_average;
};

namespace serial {
/// y = W x, skipping zero weights.
void mix(const Matrix& w, const StateMatrix& x, StateMatrix& y);
/// x_next_i = y_i - eta clip(noisy grad at x_i). `used_grads` may be null.
void local_step(const LocalStepInputs& in, StateMatrix& x_next, StateMatrix* used_grads,
                std::span<AgentStats> stats);
void row_mean(const StateMatrix& x, Vector& mean);
}  // namespace serial

namespace parallel {
void mix(const Matrix& w, const StateMatrix& x, StateMatrix& y);
void local_step(const LocalStepInputs& in, StateMatrix& x_next, StateMatrix* used_grads,
                std::span<AgentStats> stats);
}  // namespace parallel

void mix(Exec exec, const Matrix& w, const StateMatrix& x, StateMatrix& y);
void local_step(Exec exec, const LocalStepInputs& in, StateMatrix& x_next, StateMatrix* used_grads,
                std::span<AgentStats> stats);

}  // namespace hclip::kernels
