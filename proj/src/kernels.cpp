// SPDX-License-Identifier: Apache-2.0
#include "hclip/kernels.hpp"

#include <cmath>
#include <vector>

#include "hclip/errors.hpp"
#include "hclip/noise.hpp"
#include "hclip/random.hpp"
#include "hclip/schedules.hpp"

namespace hclip::kernels {

namespace {

void check_shapes(const Matrix& w, const StateMatrix& x, const StateMatrix& y) {
  if (w.rows() != x.rows() || w.cols() != x.rows() || y.rows() != x.rows() || y.cols() != x.cols()) {
    fail(ErrorKind::malformed_input, "mixing shapes disagree");
  }
}

inline void mix_row(const Matrix& w, const StateMatrix& x, StateMatrix& y, Eigen::Index i) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  double* out = y.row(i).data();
  for (Eigen::Index k = 0; k < d; ++k) out[k] = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double wij = w(i, j);
    if (wij == 0.0) continue;
    const double* src = x.row(j).data();
    for (Eigen::Index k = 0; k < d; ++k) out[k] += wij * src[k];
  }
}

void check_step(const LocalStepInputs& in, const StateMatrix& x_next, const StateMatrix* used_grads,
                std::span<AgentStats> stats) {
  const Eigen::Index n = in.objectives.n_agents();
  const Eigen::Index d = in.objectives.dim();
  if (in.x.rows() != n || in.x.cols() != d || in.y.rows() != n || in.y.cols() != d ||
      x_next.rows() != n || x_next.cols() != d || in.centered_average.size() != d ||
      static_cast<Eigen::Index>(stats.size()) != n) {
    fail(ErrorKind::malformed_input, "local step shapes disagree");
  }
  if (used_grads != nullptr && (used_grads->rows() != n || used_grads->cols() != d)) {
    fail(ErrorKind::malformed_input, "gradient buffer has the wrong shape");
  }
  if (in.config.clip && !(in.config.lambda > 0.0)) fail(ErrorKind::invalid_argument, "clip threshold must be positive");
}

void agent_step(const LocalStepInputs& in, int i, StateMatrix& x_next, StateMatrix* used_grads,
                AgentStats& st) {
  const int d = in.objectives.dim();
  const LocalObjective& local = in.objectives.local(i);
  std::vector<double> exact(static_cast<std::size_t>(d));
  std::vector<double> grad(static_cast<std::size_t>(d));
  local.gradient_into(in.x.row(i).data(), exact.data());

  Stream rng = substream(in.config.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(in.config.t),
                         StreamDomain::gradient_noise);
  sample_into(in.objectives.noise(), grad, rng);

  double exact_sq = 0.0;
  double noisy_sq = 0.0;
  for (int k = 0; k < d; ++k) {
    grad[k] += exact[k];
    exact_sq += exact[k] * exact[k];
    noisy_sq += grad[k] * grad[k];
  }
  st.exact_norm = std::sqrt(exact_sq);
  st.noisy_norm = std::sqrt(noisy_sq);
  st.clipped = in.config.clip ? clip_in_place(grad, in.config.lambda) : false;

  double used_sq = 0.0;
  double theta_sq = 0.0;
  double theta_dot = 0.0;
  const double* y = in.y.row(i).data();
  double* out = x_next.row(i).data();
  for (int k = 0; k < d; ++k) {
    const double theta = grad[k] - exact[k];
    used_sq += grad[k] * grad[k];
    theta_sq += theta * theta;
    theta_dot += theta * in.centered_average[k];
    out[k] = y[k] - in.config.eta * grad[k];
  }
  st.used_norm = std::sqrt(used_sq);
  st.theta_norm = std::sqrt(theta_sq);
  st.theta_dot = theta_dot;
  if (used_grads != nullptr) {
    double* g = used_grads->row(i).data();
    for (int k = 0; k < d; ++k) g[k] = grad[k];
  }
}

}  // namespace

namespace serial {

void mix(const Matrix& w, const StateMatrix& x, StateMatrix& y) {
  check_shapes(w, x, y);
  for (Eigen::Index i = 0; i < x.rows(); ++i) mix_row(w, x, y, i);
}

void local_step(const LocalStepInputs& in, StateMatrix& x_next, StateMatrix* used_grads,
                std::span<AgentStats> stats) {
  check_step(in, x_next, used_grads, stats);
  for (int i = 0; i < in.objectives.n_agents(); ++i) {
    agent_step(in, i, x_next, used_grads, stats[static_cast<std::size_t>(i)]);
  }
}

void row_mean(const StateMatrix& x, Vector& mean) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  mean.setZero(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* r = x.row(i).data();
    for (Eigen::Index k = 0; k < d; ++k) mean[k] += r[k];
  }
  mean /= static_cast<double>(n);
}

}  // namespace serial

namespace parallel {

void mix(const Matrix& w, const StateMatrix& x, StateMatrix& y) {
  check_shapes(w, x, y);
  const Eigen::Index n = x.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) mix_row(w, x, y, i);
}

void local_step(const LocalStepInputs& in, StateMatrix& x_next, StateMatrix* used_grads,
                std::span<AgentStats> stats) {
  check_step(in, x_next, used_grads, stats);
  const int n = in.objectives.n_agents();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    agent_step(in, i, x_next, used_grads, stats[static_cast<std::size_t>(i)]);
  }
}

}  // namespace parallel

void mix(Exec exec, const Matrix& w, const StateMatrix& x, StateMatrix& y) {
  if (exec == Exec::parallel) {
    parallel::mix(w, x, y);
  } else {
    serial::mix(w, x, y);
  }
}

void local_step(Exec exec, const LocalStepInputs& in, StateMatrix& x_next, StateMatrix* used_grads,
                std::span<AgentStats> stats) {
  if (exec == Exec::parallel) {
    parallel::local_step(in, x_next, used_grads, stats);
  } else {
    serial::local_step(in, x_next, used_grads, stats);
  }
}

}  // namespace hclip::kernels
