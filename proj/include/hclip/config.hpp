// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hclip/engine.hpp"
#include "hclip/noise.hpp"
#include "hclip/objectives.hpp"
#include "hclip/schedules.hpp"

namespace hclip {

struct GraphConfig {
  /// switching_ring | complete | random | file
  std::string generator = "switching_ring";
  int n_agents = 20;
  int period = 4;
  /// Only used by the random generator.
  double weight_floor = 0.1;
  std::uint64_t seed = 1;
  std::string file;

  bool operator==(const GraphConfig&) const = default;
};

struct ObjectiveConfig {
  /// synthetic | libsvm
  std::string source = "synthetic";
  double ridge = 0.1;
  int dim = 50;
  int samples_per_agent = 100;
  double heterogeneity = 0.5;
  double spectrum_decay = 0.5;
  double label_noise = 0.01;
  std::uint64_t data_seed = 1;
  std::string path;
  std::int64_t max_rows = 0;
  int dim_cap = 0;
  PartitionPolicy partition = PartitionPolicy::contiguous;

  bool operator==(const ObjectiveConfig&) const = default;
};

struct NoiseConfig {
  NoiseKind kind = NoiseKind::student_t;
  double shape = 2.0;
  double pareto_scale = 1.0;
  double scale = 0.2;
  double p = 1.5;
  /// Empty means derive from the distribution and dimension.
  std::optional<double> sigma;

  bool operator==(const NoiseConfig&) const = default;
};

enum class ModeSelection { clipped, baseline, both };

struct RunConfig {
  std::uint64_t seed = 1;
  int n_seeds = 1;
  std::int64_t stride = 0;
  int jobs = 1;
  ModeSelection modes = ModeSelection::both;
  std::string out_dir;
  std::string initial_states;

  bool operator==(const RunConfig&) const = default;
};

struct ExperimentConfig {
  GraphConfig graph;
  ObjectiveConfig objective;
  NoiseConfig noise;
  ScheduleParams schedule;
  /// Replace (kappa, alpha, lambda, m) with suggest_params output.
  bool suggest_schedule = false;
  RunConfig run;
  /// Directory relative paths are resolved against.
  std::string base_dir;

  bool operator==(const ExperimentConfig&) const = default;

  std::vector<Mode> modes() const;
};

/// Overrides are "section.key=value" and applied before validation.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                              const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
std::string serialize_config(const ExperimentConfig& config);

/// Throws parse-error naming the offending field.
void validate_config(const ExperimentConfig& config);

std::string resolve_path(const ExperimentConfig& config, const std::string& path);

GraphSchedule build_schedule(const ExperimentConfig& config);
NoiseModel build_noise(const ExperimentConfig& config, int dim);
ObjectiveSet build_objectives(const ExperimentConfig& config);
/// Validated schedule plus objectives and optimum.
Problem build_problem(const ExperimentConfig& config);

/// Initial states for `seed` from the configured file or the seeded default.
StateMatrix build_initial_states(const ExperimentConfig& config, std::uint64_t seed);

/// Configured schedule params, with suggest_params applied when requested.
ScheduleParams resolve_schedule(const ExperimentConfig& config, const Problem& problem);

RunOptions run_options(const ExperimentConfig& config, Mode mode, std::uint64_t seed);

const char* to_string(ModeSelection modes) noexcept;
ModeSelection parse_mode_selection(const std::string& name);

}  // namespace hclip
