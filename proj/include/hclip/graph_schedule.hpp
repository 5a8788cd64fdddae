// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hclip/random.hpp"
#include "hclip/types.hpp"

namespace hclip {

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kProductStochasticTol = 1e-10;

/// Time-varying mixing sequence W_1, W_2, ... given as a finite list that
/// repeats cyclically. Entry (i, j) of W_t is the weight agent i puts on
/// agent j's state.
///
/// Construction only checks shape and sign; the connectivity and
/// stochasticity contract is checked by validate_schedule().
class GraphSchedule {
 public:
  GraphSchedule(int n_agents, double weight_floor, int period, std::vector<Matrix> matrices);

  int n_agents() const noexcept { return n_; }
  double weight_floor() const noexcept { return eta_; }
  int period() const noexcept { return period_; }
  std::size_t cycle_length() const noexcept { return matrices_.size(); }
  const std::vector<Matrix>& matrices() const noexcept { return matrices_; }

  /// W_t for t >= 1.
  const Matrix& at(std::int64_t t) const;

  GraphSchedule with_period(int period) const;
  GraphSchedule with_weight_floor(double eta) const;

 private:
  int n_;
  double eta_;
  int period_;
  std::vector<Matrix> matrices_;
};

enum class ScheduleClause { none, weight_floor, doubly_stochastic, connectivity };

const char* to_string(ScheduleClause clause) noexcept;

struct ValidationReport {
  bool pass = true;
  ScheduleClause clause = ScheduleClause::none;
  std::int64_t time = 0;
  std::string detail;
};

/// Checks the weight floor, double stochasticity and B-window strong
/// connectivity for every t in [1, horizon].
ValidationReport validate_schedule(const GraphSchedule& schedule, std::int64_t horizon);

/// Phi(k, s) = W_{k-1} ... W_s, identity when k == s.
Matrix transition_product(const GraphSchedule& schedule, std::int64_t k, std::int64_t s);

struct ContractionConstants {
  double gamma = 0.0;
  double beta = 0.0;
};

/// gamma = (1 - eta/(4N^2))^-2, beta = (1 - eta/(4N^2))^(1/B). Throws
/// precondition-violation when the schedule does not validate.
ContractionConstants contraction_constants(const GraphSchedule& schedule);

/// Same formula without validation, for callers that already validated.
ContractionConstants contraction_constants(int n_agents, double weight_floor, int period);

struct Lemma1Report {
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  /// max over checked tuples of |Phi_ij - 1/N| - gamma beta^(k-s)
  double worst_margin = -1.0;
  std::int64_t worst_k = 0;
  std::int64_t worst_s = 0;
  int worst_i = 0;
  int worst_j = 0;
  ContractionConstants constants;
};

/// Checks |[Phi(k,s)]_ij - 1/N| <= gamma beta^(k-s) for every gap in
/// [0, max_gap] and every (i, j). Start times are every residue of the
/// cycle plus `trials` random starts drawn from `seed`.
Lemma1Report verify_lemma1(const GraphSchedule& schedule, int max_gap, int trials,
                           std::uint64_t seed);

/// Same check with caller-provided constants; used on schedules that do not
/// validate (negative tests).
Lemma1Report verify_lemma1(const GraphSchedule& schedule, const ContractionConstants& constants,
                           int max_gap, int trials, std::uint64_t seed);

// Generators -----------------------------------------------------------------

/// Symmetric weights W_ij = 1/(1 + max(d_i, d_j)) on the given undirected
/// edges, remainder of each row on the diagonal.
Matrix metropolis_weights(int n_agents, const std::vector<std::pair<int, int>>& edges);

/// B sparse graphs; ring edge {k, k+1 mod N} lives in graph k mod B, so the
/// union over any B consecutive steps is the full ring.
GraphSchedule switching_ring(int n_agents, int period);

/// Complete graph with uniform weights 1/N.
GraphSchedule uniform_complete(int n_agents);

/// Identity at every step; never connected for N >= 2.
GraphSchedule identity_schedule(int n_agents, int period);

/// Random schedule satisfying the connectivity contract for the given
/// weights floor: a random spanning path split over `period` graphs plus
/// random extra edges, symmetric weights drawn in [eta, (1-eta)/deg].
GraphSchedule random_schedule(int n_agents, int period, double weight_floor, Stream& rng);

/// Smallest positive entry over all matrices.
double min_positive_entry(const std::vector<Matrix>& matrices);

// Plain-text file format -----------------------------------------------------
// Header "N B eta", then per time step N rows of N decimals.

void write_schedule(std::ostream& out, const GraphSchedule& schedule);
GraphSchedule read_schedule(std::istream& in);
GraphSchedule load_schedule_file(const std::string& path);
void save_schedule_file(const std::string& path, const GraphSchedule& schedule);

}  // namespace hclip
