// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "hclip/random.hpp"
#include "hclip/types.hpp"

namespace hclip {

enum class NoiseKind { none, gaussian, student_t, pareto };

const char* to_string(NoiseKind kind) noexcept;
NoiseKind parse_noise_kind(const std::string& name);

/// Additive gradient noise with i.i.d. coordinates and a declared moment
/// bound E||xi||^p <= sigma^p on the full (scaled) vector.
struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  /// dof for student_t, std for gaussian, tail index for pareto.
  double shape = 0.0;
  /// Pareto minimum x_m; unused by the other kinds.
  double pareto_scale = 1.0;
  double scale = 1.0;
  double p = 2.0;
  double sigma = 0.0;

  static NoiseModel none();
  static NoiseModel gaussian(double std_dev, double scale, double p, double sigma);
  static NoiseModel student_t(double dof, double scale, double p, double sigma);
  static NoiseModel pareto(double tail_index, double x_min, double scale, double p, double sigma);

  /// Throws invalid-argument when the declared (p, sigma) is inconsistent
  /// with the kind (e.g. p >= dof for student_t).
  void validate() const;

  bool operator==(const NoiseModel&) const = default;
};

/// E|T|^p for a Student-t variable with nu degrees of freedom, p < nu.
double student_t_abs_moment(double nu, double p);

/// E|Z|^p for Z ~ N(0, std^2).
double gaussian_abs_moment(double std_dev, double p);

/// A valid sigma for `dim` coordinates, or nullopt when the kind has no
/// closed form (pareto). For student_t this uses ||xi||^p <= sum |xi_k|^p
/// (p <= 2), for gaussian the exact chi moment.
std::optional<double> declared_sigma(NoiseKind kind, double shape, double scale, double p, int dim);

/// Fills `out` with i.i.d. scaled draws.
void sample_into(const NoiseModel& model, std::span<double> out, Stream& rng);

Vector sample(const NoiseModel& model, int dim, Stream& rng);

struct MomentEstimate {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t n_samples = 0;
};

/// Sample mean of ||xi||^p with a 95% percentile-bootstrap interval.
MomentEstimate estimate_p_moment(const NoiseModel& model, double p, int dim, std::int64_t n_samples,
                                 std::uint64_t seed, int bootstrap_resamples = 200);

}  // namespace hclip
