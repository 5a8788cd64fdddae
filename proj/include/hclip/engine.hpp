// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hclip/graph_schedule.hpp"
#include "hclip/kernels.hpp"
#include "hclip/objectives.hpp"
#include "hclip/schedules.hpp"
#include "hclip/types.hpp"

namespace hclip {

enum class Mode { clipped, baseline };

const char* to_string(Mode mode) noexcept;
Mode parse_mode(const std::string& name);

/// Everything a run needs besides its seed and schedule parameters.
struct Problem {
  ObjectiveSet objectives;
  GraphSchedule schedule;
  Optimum optimum;

  /// Validates the schedule over one period and solves for x*.
  static Problem build(ObjectiveSet objectives, GraphSchedule schedule);
};

struct RunOptions {
  Mode mode = Mode::clipped;
  std::uint64_t seed = 0;
  /// 0 picks 1 for T <= 10^4, else ceil(T / 10^4).
  std::int64_t stride = 0;
  /// Keep per-agent states and applied gradients on recorded rows.
  bool keep_states = false;
  kernels::Exec exec = kernels::Exec::parallel;
  /// Overrides the seeded uniform [-1, 1]^d initialization.
  std::optional<StateMatrix> initial_states;
};

/// Scalars recorded for one iteration t. Running quantities (run_avg_gap,
/// delta_runmax, theta_acc) are accumulated at full resolution regardless
/// of the stride.
struct RunRow {
  std::int64_t t = 0;
  double eta = 0.0;
  double lambda = 0.0;
  double fbar_gap = 0.0;
  double run_avg_gap = 0.0;
  double consensus_max = 0.0;
  double delta = 0.0;
  double delta_runmax = 0.0;
  double z = 0.0;
  /// (1/N) sum_i <theta_i, xbar - x*> at this t.
  double theta_dot_mean = 0.0;
  /// sum_{s<=t} (1/N) sum_i 2 z_s eta_s <theta_i, xbar_s - x*>
  double theta_acc = 0.0;
  int clip_count = 0;
};

struct RunRecord {
  Mode mode = Mode::clipped;
  std::uint64_t seed = 0;
  ScheduleParams params;
  int n_agents = 0;
  int dim = 0;
  std::int64_t stride = 1;
  double r1 = 0.0;
  double delta1 = 0.0;
  std::vector<RunRow> rows;

  // Per (row, agent), row-major with n_agents columns.
  std::vector<double> deviation;
  std::vector<double> exact_grad_norm;
  std::vector<double> noisy_grad_norm;
  std::vector<double> used_grad_norm;
  std::vector<double> theta_norm;
  std::vector<double> theta_dot;

  /// xbar_t per recorded row.
  StateMatrix averages;
  /// x_{i,t} and the applied gradients per recorded row (keep_states only).
  std::vector<StateMatrix> states;
  std::vector<StateMatrix> applied_grads;

  std::string condition_digest;
  double wall_seconds = 0.0;

  double at(const std::vector<double>& per_agent, std::size_t row, int agent) const {
    return per_agent[row * static_cast<std::size_t>(n_agents) + static_cast<std::size_t>(agent)];
  }
};

std::int64_t default_stride(std::int64_t horizon);

/// x_{i,1} ~ U[-1, 1]^d from the seed.
StateMatrix initial_states(int n_agents, int dim, std::uint64_t seed);

ProblemConstants problem_constants(const Problem& problem, const StateMatrix& initial);

RunRecord run(const Problem& problem, const ScheduleParams& params, const RunOptions& options);

RunRecord run_clipped(const Problem& problem, const ScheduleParams& params, RunOptions options);

/// Same noise realizations as run_clipped for the same seed; no clipping.
RunRecord run_unclipped_baseline(const Problem& problem, const ScheduleParams& params, RunOptions options);

/// Seeds base_seed, base_seed+1, ...; output ordered by seed and identical
/// for any `jobs`.
std::vector<RunRecord> run_ensemble(const Problem& problem, const ScheduleParams& params,
                                    const RunOptions& options, std::uint64_t base_seed, int n_seeds,
                                    int jobs = 1);

}  // namespace hclip
