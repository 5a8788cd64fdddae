// SPDX-License-Identifier: Apache-2.0
#include "hclip/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

#include <fmt/format.h>

#include "hclip/errors.hpp"

namespace hclip {

const char* to_string(Mode mode) noexcept { return mode == Mode::clipped ? "clipped" : "baseline"; }

Mode parse_mode(const std::string& name) {
  if (name == "clipped") return Mode::clipped;
  if (name == "baseline") return Mode::baseline;
  fail(ErrorKind::invalid_argument, fmt::format("unknown mode '{}'", name));
}

Problem Problem::build(ObjectiveSet objectives, GraphSchedule schedule) {
  if (objectives.n_agents() != schedule.n_agents()) {
    fail(ErrorKind::malformed_input, fmt::format("{} objectives but {} agents in the graph", objectives.n_agents(),
                                                 schedule.n_agents()));
  }
  ValidationReport report = validate_schedule(
      schedule, static_cast<std::int64_t>(schedule.cycle_length()) + schedule.period());
  if (!report.pass) {
    fail(ErrorKind::precondition_violation, fmt::format("schedule fails {} at t = {}: {}", to_string(report.clause),
                                                        report.time, report.detail));
  }
  Optimum opt = solve_optimum(objectives);
  return Problem{std::move(objectives), std::move(schedule), std::move(opt)};
}

std::int64_t default_stride(std::int64_t horizon) {
  if (horizon <= 10000) return 1;
  return (horizon + 9999) / 10000;
}

StateMatrix initial_states(int n_agents, int dim, std::uint64_t seed) {
  StateMatrix x(n_agents, dim);
  for (int i = 0; i < n_agents; ++i) {
    Stream rng = substream(seed, static_cast<std::uint64_t>(i), 0, StreamDomain::initial_state);
    for (int k = 0; k < dim; ++k) x(i, k) = -1.0 + 2.0 * rng.uniform();
  }
  return x;
}

ProblemConstants problem_constants(const Problem& problem, const StateMatrix& initial) {
  ProblemConstants c;
  ContractionConstants cc = contraction_constants(problem.schedule.n_agents(), problem.schedule.weight_floor(),
                                                  problem.schedule.period());
  c.gamma = cc.gamma;
  c.beta = cc.beta;
  c.n_agents = problem.objectives.n_agents();
  c.smoothness = problem.optimum.smoothness;
  c.b_star = problem.optimum.b_star;
  c.sigma = problem.objectives.noise().sigma;
  c.p = problem.objectives.noise().kind == NoiseKind::none ? 2.0 : problem.objectives.noise().p;
  Vector mean = initial.colwise().mean().transpose();
  c.delta1 = (mean - problem.optimum.x_star).norm();
  double r1 = 0.0;
  for (Eigen::Index i = 0; i < initial.rows(); ++i) r1 = std::max(r1, initial.row(i).norm());
  c.r1 = r1;
  return c;
}

RunRecord run(const Problem& problem, const ScheduleParams& params, const RunOptions& options) {
  params.validate();
  const auto start = std::chrono::steady_clock::now();
  const int n = problem.objectives.n_agents();
  const int d = problem.objectives.dim();
  const std::int64_t horizon = params.horizon;
  const std::int64_t stride = options.stride > 0 ? options.stride : default_stride(horizon);

  StateMatrix x = options.initial_states ? *options.initial_states : initial_states(n, d, options.seed);
  if (x.rows() != n || x.cols() != d) {
    fail(ErrorKind::malformed_input, fmt::format("initial states are {}x{}, expected {}x{}", x.rows(), x.cols(), n, d));
  }

  RunRecord rec;
  rec.mode = options.mode;
  rec.seed = options.seed;
  rec.params = params;
  rec.n_agents = n;
  rec.dim = d;
  rec.stride = stride;
  {
    ProblemConstants pc = problem_constants(problem, x);
    rec.r1 = pc.r1;
    rec.delta1 = pc.delta1;
    if (problem.objectives.noise().kind != NoiseKind::none) {
      rec.condition_digest = check_condition7(params, pc).digest();
    } else {
      rec.condition_digest = "noise=none";
    }
  }
  const auto expected_rows = static_cast<std::size_t>((horizon + stride - 1) / stride + 1);
  rec.rows.reserve(expected_rows);

  const Vector& x_star = problem.optimum.x_star;
  const double a0 = params.a0();
  const bool clip = options.mode == Mode::clipped;

  StateMatrix y(n, d);
  StateMatrix x_next(n, d);
  StateMatrix grads(n, d);
  std::vector<kernels::AgentStats> stats(static_cast<std::size_t>(n));
  std::vector<double> dev(static_cast<std::size_t>(n));
  Vector xbar(d);
  std::vector<Vector> recorded_means;

  double gap_sum = 0.0;
  double runmax = 0.0;
  double theta_acc = 0.0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    kernels::serial::row_mean(x, xbar);
    Vector centered = xbar - x_star;
    const double delta = centered.norm();
    runmax = std::max(runmax, delta);
    const double z = 1.0 / (a0 + 4.0 * runmax);
    const double gap = problem.optimum.gap(xbar);
    gap_sum += gap;
    double consensus = 0.0;
    for (int i = 0; i < n; ++i) {
      double sq = 0.0;
      for (int k = 0; k < d; ++k) {
        double e = x(i, k) - xbar[k];
        sq += e * e;
      }
      dev[static_cast<std::size_t>(i)] = std::sqrt(sq);
      consensus = std::max(consensus, dev[static_cast<std::size_t>(i)]);
    }

    const double eta = params.step_size(t);
    const double lambda = params.clip_threshold(t);
    kernels::mix(options.exec, problem.schedule.at(t), x, y);
    kernels::LocalStepConfig cfg{eta, lambda, clip, options.seed, t};
    kernels::LocalStepInputs in{problem.objectives, cfg, x, y, centered};
    kernels::local_step(options.exec, in, x_next, options.keep_states ? &grads : nullptr, stats);

    double dot_sum = 0.0;
    int clipped = 0;
    for (const auto& s : stats) {
      dot_sum += s.theta_dot;
      clipped += s.clipped ? 1 : 0;
    }
    const double dot_mean = dot_sum / static_cast<double>(n);
    theta_acc += 2.0 * z * eta * dot_mean;

    if ((t - 1) % stride == 0 || t == horizon) {
      RunRow row;
      row.t = t;
      row.eta = eta;
      row.lambda = lambda;
      row.fbar_gap = gap;
      row.run_avg_gap = gap_sum / static_cast<double>(t);
      row.consensus_max = consensus;
      row.delta = delta;
      row.delta_runmax = runmax;
      row.z = z;
      row.theta_dot_mean = dot_mean;
      row.theta_acc = theta_acc;
      row.clip_count = clipped;
      rec.rows.push_back(row);
      for (int i = 0; i < n; ++i) {
        const auto& s = stats[static_cast<std::size_t>(i)];
        rec.deviation.push_back(dev[static_cast<std::size_t>(i)]);
        rec.exact_grad_norm.push_back(s.exact_norm);
        rec.noisy_grad_norm.push_back(s.noisy_norm);
        rec.used_grad_norm.push_back(s.used_norm);
        rec.theta_norm.push_back(s.theta_norm);
        rec.theta_dot.push_back(s.theta_dot);
      }
      recorded_means.push_back(xbar);
      if (options.keep_states) {
        rec.states.push_back(x);
        rec.applied_grads.push_back(grads);
      }
    }

    if (!x_next.allFinite()) throw NumericalFailure(t, "non-finite agent state");
    std::swap(x, x_next);
  }

  rec.averages.resize(static_cast<Eigen::Index>(recorded_means.size()), d);
  for (std::size_t r = 0; r < recorded_means.size(); ++r) {
    rec.averages.row(static_cast<Eigen::Index>(r)) = recorded_means[r].transpose();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunRecord run_clipped(const Problem& problem, const ScheduleParams& params, RunOptions options) {
  options.mode = Mode::clipped;
  return run(problem, params, options);
}

RunRecord run_unclipped_baseline(const Problem& problem, const ScheduleParams& params, RunOptions options) {
  options.mode = Mode::baseline;
  return run(problem, params, options);
}

std::vector<RunRecord> run_ensemble(const Problem& problem, const ScheduleParams& params,
                                    const RunOptions& options, std::uint64_t base_seed, int n_seeds, int jobs) {
  if (n_seeds < 1) fail(ErrorKind::invalid_argument, "ensemble needs at least one seed");
  if (jobs < 1) jobs = 1;
  std::vector<RunRecord> out(static_cast<std::size_t>(n_seeds));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_seeds));
  RunOptions per_seed = options;
  // Seeds run side by side; inside each run the kernels stay serial so the
  // thread count never changes the arithmetic.
  if (jobs > 1) per_seed.exec = kernels::Exec::serial;
#pragma omp parallel for schedule(dynamic) num_threads(jobs) firstprivate(per_seed)
  for (int k = 0; k < n_seeds; ++k) {
    try {
      per_seed.seed = base_seed + static_cast<std::uint64_t>(k);
      out[static_cast<std::size_t>(k)] = run(problem, params, per_seed);
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace hclip
