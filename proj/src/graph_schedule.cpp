// SPDX-License-Identifier: Apache-2.0
#include "hclip/graph_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "hclip/errors.hpp"

namespace hclip {

GraphSchedule::GraphSchedule(int n_agents, double weight_floor, int period,
                             std::vector<Matrix> matrices)
    : n_(n_agents), eta_(weight_floor), period_(period), matrices_(std::move(matrices)) {
  if (n_ < 1) fail(ErrorKind::invalid_argument, "agent count must be positive");
  if (!(eta_ > 0.0 && eta_ < 1.0)) fail(ErrorKind::invalid_argument, "weight floor must lie in (0,1)");
  if (period_ < 1) fail(ErrorKind::invalid_argument, "connectivity period must be positive");
  if (matrices_.empty()) fail(ErrorKind::malformed_input, "schedule has no matrices");
  for (std::size_t k = 0; k < matrices_.size(); ++k) {
    const Matrix& w = matrices_[k];
    if (w.rows() != n_ || w.cols() != n_) {
      fail(ErrorKind::malformed_input,
           fmt::format("matrix {} is {}x{}, expected {}x{}", k + 1, w.rows(), w.cols(), n_, n_));
    }
    if (!w.allFinite() || (w.array() < 0.0).any()) {
      fail(ErrorKind::malformed_input, fmt::format("matrix {} has a negative or non-finite entry", k + 1));
    }
  }
}

const Matrix& GraphSchedule::at(std::int64_t t) const {
  if (t < 1) fail(ErrorKind::invalid_argument, "time index must be >= 1");
  return matrices_[static_cast<std::size_t>((t - 1) % static_cast<std::int64_t>(matrices_.size()))];
}

GraphSchedule GraphSchedule::with_period(int period) const {
  return GraphSchedule(n_, eta_, period, matrices_);
}

GraphSchedule GraphSchedule::with_weight_floor(double eta) const {
  return GraphSchedule(n_, eta, period_, matrices_);
}

const char* to_string(ScheduleClause clause) noexcept {
  switch (clause) {
    case ScheduleClause::none: return "none";
    case ScheduleClause::weight_floor: return "weight-floor";
    case ScheduleClause::doubly_stochastic: return "doubly-stochastic";
    case ScheduleClause::connectivity: return "connectivity";
  }
  return "unknown";
}

namespace {

bool strongly_connected(const std::vector<std::vector<char>>& adj) {
  const int n = static_cast<int>(adj.size());
  if (n <= 1) return true;
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        bool edge = forward ? adj[u][v] : adj[v][u];
        if (edge && !seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reach_all(true) && reach_all(false);
}

}  // namespace

ValidationReport validate_schedule(const GraphSchedule& schedule, std::int64_t horizon) {
  const int period = schedule.period();
  if (horizon < period) {
    fail(ErrorKind::invalid_argument,
         fmt::format("horizon {} shorter than connectivity period {}", horizon, period));
  }
  const int n = schedule.n_agents();
  const double eta = schedule.weight_floor();
  const auto cycle = static_cast<std::int64_t>(schedule.cycle_length());
  ValidationReport report;
  auto violation = [&](ScheduleClause clause, std::int64_t t, std::string detail) {
    report.pass = false;
    report.clause = clause;
    report.time = t;
    report.detail = std::move(detail);
    return report;
  };

  // The schedule is cyclic, so one cycle of matrices and one cycle of window
  // starts cover every t in [1, horizon].
  const std::int64_t last_matrix = std::min(horizon, cycle);
  const std::int64_t last_window = std::min(horizon - period + 1, cycle);
  const std::int64_t last = std::max(last_matrix, last_window);
  for (std::int64_t t = 1; t <= last; ++t) {
    if (t <= last_matrix) {
      const Matrix& w = schedule.at(t);
      for (int i = 0; i < n; ++i) {
        if (w(i, i) < eta - kStochasticTol) {
          return violation(ScheduleClause::weight_floor, t,
                           fmt::format("diagonal entry ({},{}) = {} below floor {}", i, i, w(i, i), eta));
        }
        for (int j = 0; j < n; ++j) {
          double v = w(i, j);
          if (v != 0.0 && v < eta - kStochasticTol) {
            return violation(ScheduleClause::weight_floor, t,
                             fmt::format("entry ({},{}) = {} below floor {}", i, j, v, eta));
          }
        }
      }
      for (int i = 0; i < n; ++i) {
        double row = w.row(i).sum();
        double col = w.col(i).sum();
        if (std::abs(row - 1.0) > kStochasticTol) {
          return violation(ScheduleClause::doubly_stochastic, t,
                           fmt::format("row {} sums to {:.17g}", i, row));
        }
        if (std::abs(col - 1.0) > kStochasticTol) {
          return violation(ScheduleClause::doubly_stochastic, t,
                           fmt::format("column {} sums to {:.17g}", i, col));
        }
      }
    }
    if (t <= last_window) {
      std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
      for (int l = 0; l < period; ++l) {
        const Matrix& w = schedule.at(t + l);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            if (i != j && w(i, j) > 0.0) adj[i][j] = 1;
          }
        }
      }
      if (!strongly_connected(adj)) {
        return violation(ScheduleClause::connectivity, t,
                         fmt::format("union of edges over [{}, {}] is not strongly connected", t,
                                     t + period - 1));
      }
    }
  }
  return report;
}

Matrix transition_product(const GraphSchedule& schedule, std::int64_t k, std::int64_t s) {
  if (s < 1) fail(ErrorKind::invalid_argument, "start time must be >= 1");
  if (k < s) fail(ErrorKind::invalid_argument, fmt::format("k = {} < s = {}", k, s));
  const int n = schedule.n_agents();
  Matrix phi = Matrix::Identity(n, n);
  for (std::int64_t tau = s; tau < k; ++tau) {
    phi = schedule.at(tau) * phi;
  }
  return phi;
}

ContractionConstants contraction_constants(int n_agents, double weight_floor, int period) {
  const double n = static_cast<double>(n_agents);
  const double base = 1.0 - weight_floor / (4.0 * n * n);
  return {std::pow(base, -2.0), std::pow(base, 1.0 / static_cast<double>(period))};
}

ContractionConstants contraction_constants(const GraphSchedule& schedule) {
  ValidationReport report = validate_schedule(schedule, std::max<std::int64_t>(
      schedule.period(), static_cast<std::int64_t>(schedule.cycle_length()) + schedule.period()));
  if (!report.pass) {
    fail(ErrorKind::precondition_violation,
         fmt::format("schedule fails {} at t = {}: {}", to_string(report.clause), report.time,
                     report.detail));
  }
  return contraction_constants(schedule.n_agents(), schedule.weight_floor(), schedule.period());
}

Lemma1Report verify_lemma1(const GraphSchedule& schedule, int max_gap, int trials,
                           std::uint64_t seed) {
  return verify_lemma1(schedule, contraction_constants(schedule), max_gap, trials, seed);
}

Lemma1Report verify_lemma1(const GraphSchedule& schedule, const ContractionConstants& constants,
                           int max_gap, int trials, std::uint64_t seed) {
  if (max_gap < 0 || trials < 0) fail(ErrorKind::invalid_argument, "negative gap or trial count");
  const int n = schedule.n_agents();
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto cycle = static_cast<std::int64_t>(schedule.cycle_length());

  std::vector<std::int64_t> starts(static_cast<std::size_t>(cycle));
  std::iota(starts.begin(), starts.end(), std::int64_t{1});
  Stream rng = substream(seed, 0, 0, StreamDomain::schedule_generator);
  for (int k = 0; k < trials; ++k) {
    starts.push_back(1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(1000 * cycle)));
  }

  Lemma1Report report;
  report.constants = constants;
  for (std::int64_t s : starts) {
    Matrix phi = Matrix::Identity(n, n);
    double bound = constants.gamma;
    for (int gap = 0; gap <= max_gap; ++gap) {
      if (gap > 0) {
        phi = schedule.at(s + gap - 1) * phi;
        bound *= constants.beta;
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          double margin = std::abs(phi(i, j) - inv_n) - bound;
          ++report.checked;
          if (margin > 1e-10) ++report.violations;
          if (margin > report.worst_margin || report.checked == 1) {
            report.worst_margin = margin;
            report.worst_k = s + gap;
            report.worst_s = s;
            report.worst_i = i;
            report.worst_j = j;
          }
        }
      }
    }
  }
  return report;
}

Matrix metropolis_weights(int n_agents, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> degree(n_agents, 0);
  for (auto [i, j] : edges) {
    if (i == j || i < 0 || j < 0 || i >= n_agents || j >= n_agents) {
      fail(ErrorKind::invalid_argument, fmt::format("bad edge ({}, {})", i, j));
    }
    ++degree[i];
    ++degree[j];
  }
  Matrix w = Matrix::Zero(n_agents, n_agents);
  for (auto [i, j] : edges) {
    double v = 1.0 / (1.0 + std::max(degree[i], degree[j]));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (int i = 0; i < n_agents; ++i) {
    double off = 0.0;
    for (int j = 0; j < n_agents; ++j) {
      if (j != i) off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return w;
}

double min_positive_entry(const std::vector<Matrix>& matrices) {
  double best = 1.0;
  for (const Matrix& w : matrices) {
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      double v = w.data()[k];
      if (v > 0.0) best = std::min(best, v);
    }
  }
  return best;
}

GraphSchedule switching_ring(int n_agents, int period) {
  if (n_agents < 2) fail(ErrorKind::invalid_argument, "switching ring needs at least 2 agents");
  if (period < 1) fail(ErrorKind::invalid_argument, "period must be positive");
  const int ring_edges = n_agents == 2 ? 1 : n_agents;
  std::vector<std::vector<std::pair<int, int>>> groups(period);
  for (int k = 0; k < ring_edges; ++k) {
    groups[k % period].emplace_back(k, (k + 1) % n_agents);
  }
  std::vector<Matrix> mats;
  mats.reserve(period);
  for (const auto& g : groups) mats.push_back(metropolis_weights(n_agents, g));
  double eta = std::min(min_positive_entry(mats), 0.999999);
  return GraphSchedule(n_agents, eta, period, std::move(mats));
}

GraphSchedule uniform_complete(int n_agents) {
  if (n_agents < 1) fail(ErrorKind::invalid_argument, "agent count must be positive");
  Matrix w = Matrix::Constant(n_agents, n_agents, 1.0 / n_agents);
  double eta = std::min(1.0 / n_agents, 0.999999);
  return GraphSchedule(n_agents, eta, 1, {w});
}

GraphSchedule identity_schedule(int n_agents, int period) {
  return GraphSchedule(n_agents, 0.5, period, {Matrix::Identity(n_agents, n_agents)});
}

GraphSchedule random_schedule(int n_agents, int period, double weight_floor, Stream& rng) {
  if (n_agents < 2) fail(ErrorKind::invalid_argument, "random schedule needs at least 2 agents");
  if (period < 1) fail(ErrorKind::invalid_argument, "period must be positive");
  if (!(weight_floor > 0.0 && weight_floor <= 0.5)) {
    fail(ErrorKind::invalid_argument, "weight floor must lie in (0, 0.5]");
  }
  const int max_degree = static_cast<int>(std::floor(1.0 / weight_floor + 1e-12)) - 1;
  if (max_degree < 1) fail(ErrorKind::invalid_argument, "weight floor leaves no room for edges");
  if (max_degree == 1 && period == 1 && n_agents > 2) {
    fail(ErrorKind::invalid_argument,
         "a single matching cannot connect more than 2 agents; use a smaller floor or a longer period");
  }

  auto below = [&](int bound) { return static_cast<int>(rng() % static_cast<std::uint64_t>(bound)); };

  std::vector<int> order(n_agents);
  std::iota(order.begin(), order.end(), 0);
  for (int k = n_agents - 1; k > 0; --k) std::swap(order[k], order[below(k + 1)]);

  std::vector<std::vector<std::pair<int, int>>> edges(period);
  std::vector<std::vector<int>> degree(period, std::vector<int>(n_agents, 0));
  std::vector<std::vector<std::vector<char>>> present(
      period, std::vector<std::vector<char>>(n_agents, std::vector<char>(n_agents, 0)));
  auto add_edge = [&](int g, int i, int j) {
    edges[g].emplace_back(i, j);
    ++degree[g][i];
    ++degree[g][j];
    present[g][i][j] = present[g][j][i] = 1;
  };

  // Spanning path; with degree cap 1 consecutive path edges go to graphs of
  // opposite parity so each graph stays a matching.
  for (int q = 0; q + 1 < n_agents; ++q) {
    int g;
    if (max_degree >= 2 || period == 1) {
      g = below(period);
    } else {
      int parity = q % 2;
      int choices = (period - parity + 1) / 2;
      g = parity + 2 * below(choices);
    }
    add_edge(g, order[q], order[q + 1]);
  }
  for (int g = 0; g < period; ++g) {
    int extras = below(n_agents + 1);
    for (int e = 0; e < extras; ++e) {
      int i = below(n_agents);
      int j = below(n_agents);
      if (i == j || present[g][i][j]) continue;
      if (degree[g][i] >= max_degree || degree[g][j] >= max_degree) continue;
      add_edge(g, i, j);
    }
  }

  std::vector<Matrix> mats;
  mats.reserve(period);
  for (int g = 0; g < period; ++g) {
    Matrix w = Matrix::Zero(n_agents, n_agents);
    for (auto [i, j] : edges[g]) {
      double hi = (1.0 - weight_floor) / std::max(degree[g][i], degree[g][j]);
      double v = weight_floor + (hi - weight_floor) * rng.uniform();
      w(i, j) = v;
      w(j, i) = v;
    }
    for (int i = 0; i < n_agents; ++i) {
      double off = 0.0;
      for (int j = 0; j < n_agents; ++j) {
        if (j != i) off += w(i, j);
      }
      w(i, i) = 1.0 - off;
    }
    mats.push_back(std::move(w));
  }
  return GraphSchedule(n_agents, weight_floor, period, std::move(mats));
}

void write_schedule(std::ostream& out, const GraphSchedule& schedule) {
  const int n = schedule.n_agents();
  out << fmt::format("{} {} {:.17g}\n", n, schedule.period(), schedule.weight_floor());
  for (const Matrix& w : schedule.matrices()) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        out << fmt::format("{:.17g}", w(i, j)) << (j + 1 < n ? ' ' : '\n');
      }
    }
  }
}

GraphSchedule read_schedule(std::istream& in) {
  std::string header;
  while (std::getline(in, header)) {
    if (header.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  std::istringstream hs(header);
  long long n = 0;
  long long period = 0;
  double eta = 0.0;
  if (!(hs >> n >> period >> eta)) fail(ErrorKind::malformed_input, "schedule header must be 'N B eta'");
  if (n < 1 || period < 1) fail(ErrorKind::malformed_input, "schedule header has nonpositive N or B");

  std::vector<double> values;
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      fail(ErrorKind::malformed_input, fmt::format("schedule entry '{}' is not a number", token));
    }
    values.push_back(v);
  }
  const auto block = static_cast<std::size_t>(n * n);
  if (values.empty() || values.size() % block != 0) {
    fail(ErrorKind::malformed_input,
         fmt::format("schedule body has {} entries, not a positive multiple of N*N = {}", values.size(), block));
  }
  std::vector<Matrix> mats;
  for (std::size_t off = 0; off < values.size(); off += block) {
    Matrix w(n, n);
    for (long long i = 0; i < n; ++i) {
      for (long long j = 0; j < n; ++j) w(i, j) = values[off + static_cast<std::size_t>(i * n + j)];
    }
    mats.push_back(std::move(w));
  }
  return GraphSchedule(static_cast<int>(n), eta, static_cast<int>(period), std::move(mats));
}

GraphSchedule load_schedule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::malformed_input, fmt::format("cannot open schedule file '{}'", path));
  return read_schedule(in);
}

void save_schedule_file(const std::string& path, const GraphSchedule& schedule) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::invalid_argument, fmt::format("cannot write schedule file '{}'", path));
  write_schedule(out, schedule);
}

}  // namespace hclip
