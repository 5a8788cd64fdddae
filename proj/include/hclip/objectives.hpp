// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hclip/noise.hpp"
#include "hclip/random.hpp"
#include "hclip/types.hpp"

namespace hclip {

/// f_i(w) = (1/m) sum_j 0.5 (x_j w - y_j)^2 + (ridge/2) ||w||^2.
class LocalObjective {
 public:
  LocalObjective(Matrix features, Vector labels, double ridge);

  int dim() const noexcept { return static_cast<int>(features_.cols()); }
  int samples() const noexcept { return static_cast<int>(features_.rows()); }
  double ridge() const noexcept { return ridge_; }
  const Matrix& features() const noexcept { return features_; }
  const Vector& labels() const noexcept { return labels_; }
  /// (1/m) X^T X
  const Matrix& gram() const noexcept { return gram_; }
  /// (1/m) X^T y
  const Vector& moment() const noexcept { return moment_; }

  double value(const Vector& w) const;
  Vector gradient(const Vector& w) const;
  /// Writes the gradient at `w` into `out`; both of length dim().
  void gradient_into(const double* w, double* out) const;
  /// sigma_max(gram) + ridge.
  double smoothness() const noexcept { return smoothness_; }

 private:
  Matrix features_;
  Vector labels_;
  double ridge_;
  Matrix gram_;
  Vector moment_;
  double smoothness_;
};

class ObjectiveSet {
 public:
  ObjectiveSet(std::vector<LocalObjective> locals, NoiseModel noise);

  int n_agents() const noexcept { return static_cast<int>(locals_.size()); }
  int dim() const noexcept { return dim_; }
  const NoiseModel& noise() const noexcept { return noise_; }
  const LocalObjective& local(int agent) const;
  const std::vector<LocalObjective>& locals() const noexcept { return locals_; }
  ObjectiveSet with_noise(NoiseModel noise) const;

  Vector exact_gradient(int agent, const Vector& point) const;
  Vector noisy_gradient(int agent, const Vector& point, Stream& rng) const;
  /// Unweighted mean of the local objectives.
  double value(const Vector& point) const;
  Vector global_gradient(const Vector& point) const;
  /// max_i L_i.
  double smoothness() const noexcept;

 private:
  std::vector<LocalObjective> locals_;
  NoiseModel noise_;
  int dim_;
};

struct Optimum {
  Vector x_star;
  double f_star = 0.0;
  double b_star = 0.0;
  double smoothness = 0.0;
  /// ||grad f_i(x*)|| per agent.
  std::vector<double> local_grad_norms;
  /// Hessian of the global objective; f(x) - f* = 0.5 e^T H e, e = x - x*.
  Matrix hessian;

  double gap(const Vector& x) const;
};

Optimum solve_optimum(const ObjectiveSet& set);

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, relative tolerance `tol`.
double top_eigenvalue(const Matrix& sym, double tol = 1e-10);

struct SyntheticSpec {
  int n_agents = 20;
  int dim = 50;
  int samples_per_agent = 100;
  double heterogeneity = 0.5;
  std::uint64_t seed = 1;
  double ridge = 0.1;
  /// Column k of the features is scaled by (k+1)^-spectrum_decay.
  double spectrum_decay = 0.5;
  double label_noise = 0.01;
};

ObjectiveSet generate_synthetic(const SyntheticSpec& spec, NoiseModel noise);

struct Dataset {
  Matrix features;
  Vector labels;
};

/// Dense rows from LIBSVM sparse text. max_rows <= 0 reads every row;
/// dim_cap <= 0 keeps every feature index seen.
Dataset load_libsvm(const std::string& path, std::int64_t max_rows, int dim_cap);
Dataset parse_libsvm(std::istream& in, std::int64_t max_rows, int dim_cap);

enum class PartitionPolicy { round_robin, contiguous };

PartitionPolicy parse_partition_policy(const std::string& name);
const char* to_string(PartitionPolicy policy) noexcept;

/// Row indices per agent.
std::vector<std::vector<int>> partition_rows(int rows, int n_agents, PartitionPolicy policy);

ObjectiveSet partition(const Dataset& data, int n_agents, PartitionPolicy policy, double ridge,
                       NoiseModel noise);

}  // namespace hclip
