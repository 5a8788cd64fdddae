// SPDX-License-Identifier: Apache-2.0
#include "hclip/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "hclip/errors.hpp"

namespace hclip {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"graph", {"generator", "n_agents", "period", "weight_floor", "seed", "file"}},
      {"objective",
       {"source", "ridge", "dim", "samples_per_agent", "heterogeneity", "spectrum_decay", "label_noise", "data_seed",
        "path", "max_rows", "dim_cap", "partition"}},
      {"noise", {"kind", "shape", "pareto_scale", "scale", "p", "sigma"}},
      {"schedule", {"kappa", "alpha", "m", "b1", "lambda", "horizon", "delta", "suggest"}},
      {"run", {"seed", "seeds", "stride", "jobs", "mode", "out", "initial_states"}},
  };
  return keys;
}

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  fail(ErrorKind::parse_error, fmt::format("field {}: {}", field, msg));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& field, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) field_error(field, fmt::format("cannot parse '{}'", raw));
  return value;
}

bool parse_bool(const std::string& field, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  field_error(field, fmt::format("expected true or false, got '{}'", raw));
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <class T>
  void get(const char* section, const char* key, T& out) {
    const std::string field = fmt::format("{}.{}", section, key);
    auto node = tree_.get_child_optional(pt::ptree::path_type(field, '.'));
    if (!node) return;
    const std::string raw = node->get_value<std::string>();
    if constexpr (std::is_same_v<T, std::string>) {
      out = trim(raw);
    } else if constexpr (std::is_same_v<T, bool>) {
      out = parse_bool(field, raw);
    } else {
      out = parse_number<T>(field, raw);
    }
  }

  std::optional<std::string> raw(const char* section, const char* key) {
    auto node = tree_.get_child_optional(pt::ptree::path_type(fmt::format("{}.{}", section, key), '.'));
    if (!node) return std::nullopt;
    return trim(node->get_value<std::string>());
  }

 private:
  const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    auto it = known_keys().find(section);
    if (it == known_keys().end()) fail(ErrorKind::parse_error, fmt::format("unknown section [{}]", section));
    if (body.empty() && !body.data().empty()) {
      fail(ErrorKind::parse_error, fmt::format("key '{}' outside any section", section));
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) field_error(section + "." + key, "unknown key");
    }
  }
}

void apply_override(pt::ptree& tree, const std::string& item) {
  const auto eq = item.find('=');
  const auto dot = item.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    fail(ErrorKind::parse_error, fmt::format("override '{}' is not section.key=value", item));
  }
  const std::string section = trim(item.substr(0, dot));
  const std::string key = trim(item.substr(dot + 1, eq - dot - 1));
  const std::string value = trim(item.substr(eq + 1));
  auto it = known_keys().find(section);
  if (it == known_keys().end() || !it->second.count(key)) {
    field_error(section + "." + key, "unknown key in override");
  }
  tree.put(pt::ptree::path_type(section + "." + key, '.'), value);
}

void parse_seeds(const std::string& raw, RunConfig& run) {
  // "N..M" or a count starting at run.seed.
  const auto dots = raw.find("..");
  if (dots == std::string::npos) {
    run.n_seeds = parse_number<int>("run.seeds", raw);
    return;
  }
  const auto lo = parse_number<std::uint64_t>("run.seeds", raw.substr(0, dots));
  const auto hi = parse_number<std::uint64_t>("run.seeds", raw.substr(dots + 2));
  if (hi < lo) field_error("run.seeds", fmt::format("empty range '{}'", raw));
  run.seed = lo;
  run.n_seeds = static_cast<int>(hi - lo + 1);
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

const char* to_string(ModeSelection modes) noexcept {
  switch (modes) {
    case ModeSelection::clipped: return "clipped";
    case ModeSelection::baseline: return "baseline";
    case ModeSelection::both: return "both";
  }
  return "both";
}

ModeSelection parse_mode_selection(const std::string& name) {
  if (name == "clipped") return ModeSelection::clipped;
  if (name == "baseline") return ModeSelection::baseline;
  if (name == "both") return ModeSelection::both;
  field_error("run.mode", fmt::format("expected clipped, baseline or both, got '{}'", name));
}

std::vector<Mode> ExperimentConfig::modes() const {
  switch (run.modes) {
    case ModeSelection::clipped: return {Mode::clipped};
    case ModeSelection::baseline: return {Mode::baseline};
    case ModeSelection::both: return {Mode::clipped, Mode::baseline};
  }
  return {};
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides,
                              const std::string& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::parse_error, fmt::format("line {}: {}", e.line(), e.message()));
  }
  check_keys(tree);
  for (const auto& o : overrides) apply_override(tree, o);

  ExperimentConfig c;
  c.base_dir = base_dir;
  Reader r(tree);
  r.get("graph", "generator", c.graph.generator);
  r.get("graph", "n_agents", c.graph.n_agents);
  r.get("graph", "period", c.graph.period);
  r.get("graph", "weight_floor", c.graph.weight_floor);
  r.get("graph", "seed", c.graph.seed);
  r.get("graph", "file", c.graph.file);

  r.get("objective", "source", c.objective.source);
  r.get("objective", "ridge", c.objective.ridge);
  r.get("objective", "dim", c.objective.dim);
  r.get("objective", "samples_per_agent", c.objective.samples_per_agent);
  r.get("objective", "heterogeneity", c.objective.heterogeneity);
  r.get("objective", "spectrum_decay", c.objective.spectrum_decay);
  r.get("objective", "label_noise", c.objective.label_noise);
  r.get("objective", "data_seed", c.objective.data_seed);
  r.get("objective", "path", c.objective.path);
  r.get("objective", "max_rows", c.objective.max_rows);
  r.get("objective", "dim_cap", c.objective.dim_cap);
  if (auto v = r.raw("objective", "partition")) {
    try {
      c.objective.partition = parse_partition_policy(*v);
    } catch (const Error& e) {
      field_error("objective.partition", e.what());
    }
  }

  if (auto v = r.raw("noise", "kind")) {
    try {
      c.noise.kind = parse_noise_kind(*v);
    } catch (const Error& e) {
      field_error("noise.kind", e.what());
    }
  }
  r.get("noise", "shape", c.noise.shape);
  r.get("noise", "pareto_scale", c.noise.pareto_scale);
  r.get("noise", "scale", c.noise.scale);
  r.get("noise", "p", c.noise.p);
  if (auto v = r.raw("noise", "sigma")) {
    if (*v == "auto" || v->empty()) {
      c.noise.sigma.reset();
    } else {
      c.noise.sigma = parse_number<double>("noise.sigma", *v);
    }
  }

  r.get("schedule", "kappa", c.schedule.kappa);
  r.get("schedule", "alpha", c.schedule.alpha);
  r.get("schedule", "m", c.schedule.m);
  r.get("schedule", "b1", c.schedule.b1);
  r.get("schedule", "lambda", c.schedule.lambda);
  r.get("schedule", "horizon", c.schedule.horizon);
  r.get("schedule", "delta", c.schedule.delta);
  r.get("schedule", "suggest", c.suggest_schedule);

  r.get("run", "seed", c.run.seed);
  if (auto v = r.raw("run", "seeds")) parse_seeds(*v, c.run);
  r.get("run", "stride", c.run.stride);
  r.get("run", "jobs", c.run.jobs);
  if (auto v = r.raw("run", "mode")) c.run.modes = parse_mode_selection(*v);
  r.get("run", "out", c.run.out_dir);
  r.get("run", "initial_states", c.run.initial_states);

  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse_error, fmt::format("cannot open config '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  std::string dir = std::filesystem::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  try {
    return parse_config(buf.str(), overrides, dir);
  } catch (const Error& e) {
    fail(e.kind(), fmt::format("{}: {}", path, e.what()));
  }
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string s;
  auto line = [&s](const std::string& key, const std::string& value) { s += fmt::format("{} = {}\n", key, value); };
  s += "[graph]\n";
  line("generator", c.graph.generator);
  line("n_agents", std::to_string(c.graph.n_agents));
  line("period", std::to_string(c.graph.period));
  line("weight_floor", fmt_double(c.graph.weight_floor));
  line("seed", std::to_string(c.graph.seed));
  if (!c.graph.file.empty()) line("file", c.graph.file);
  s += "\n[objective]\n";
  line("source", c.objective.source);
  line("ridge", fmt_double(c.objective.ridge));
  line("dim", std::to_string(c.objective.dim));
  line("samples_per_agent", std::to_string(c.objective.samples_per_agent));
  line("heterogeneity", fmt_double(c.objective.heterogeneity));
  line("spectrum_decay", fmt_double(c.objective.spectrum_decay));
  line("label_noise", fmt_double(c.objective.label_noise));
  line("data_seed", std::to_string(c.objective.data_seed));
  if (!c.objective.path.empty()) line("path", c.objective.path);
  line("max_rows", std::to_string(c.objective.max_rows));
  line("dim_cap", std::to_string(c.objective.dim_cap));
  line("partition", to_string(c.objective.partition));
  s += "\n[noise]\n";
  line("kind", to_string(c.noise.kind));
  line("shape", fmt_double(c.noise.shape));
  line("pareto_scale", fmt_double(c.noise.pareto_scale));
  line("scale", fmt_double(c.noise.scale));
  line("p", fmt_double(c.noise.p));
  line("sigma", c.noise.sigma ? fmt_double(*c.noise.sigma) : std::string("auto"));
  s += "\n[schedule]\n";
  line("kappa", fmt_double(c.schedule.kappa));
  line("alpha", fmt_double(c.schedule.alpha));
  line("m", fmt_double(c.schedule.m));
  line("b1", fmt_double(c.schedule.b1));
  line("lambda", fmt_double(c.schedule.lambda));
  line("horizon", std::to_string(c.schedule.horizon));
  line("delta", fmt_double(c.schedule.delta));
  line("suggest", c.suggest_schedule ? "true" : "false");
  s += "\n[run]\n";
  line("seed", std::to_string(c.run.seed));
  line("seeds", std::to_string(c.run.n_seeds));
  line("stride", std::to_string(c.run.stride));
  line("jobs", std::to_string(c.run.jobs));
  line("mode", to_string(c.run.modes));
  if (!c.run.out_dir.empty()) line("out", c.run.out_dir);
  if (!c.run.initial_states.empty()) line("initial_states", c.run.initial_states);
  return s;
}

std::string resolve_path(const ExperimentConfig& config, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || config.base_dir.empty()) return p.string();
  return (std::filesystem::path(config.base_dir) / p).string();
}

void validate_config(const ExperimentConfig& c) {
  const auto& g = c.graph;
  if (g.generator != "switching_ring" && g.generator != "complete" && g.generator != "random" &&
      g.generator != "file") {
    field_error("graph.generator", fmt::format("unknown generator '{}'", g.generator));
  }
  if (g.generator == "file") {
    if (g.file.empty()) field_error("graph.file", "required when graph.generator = file");
    if (!std::filesystem::exists(resolve_path(c, g.file))) field_error("graph.file", "file does not exist");
  } else {
    if (g.n_agents < 1) field_error("graph.n_agents", "must be at least 1");
    if (g.period < 1) field_error("graph.period", "must be at least 1");
  }
  if (g.generator == "random" && !(g.weight_floor > 0.0 && g.weight_floor < 1.0)) {
    field_error("graph.weight_floor", "must lie in (0, 1)");
  }

  const auto& o = c.objective;
  if (o.source != "synthetic" && o.source != "libsvm") {
    field_error("objective.source", fmt::format("unknown source '{}'", o.source));
  }
  if (!(o.ridge >= 0.0)) field_error("objective.ridge", "must be nonnegative");
  if (o.source == "synthetic") {
    if (o.dim < 1) field_error("objective.dim", "must be at least 1");
    if (o.samples_per_agent < 1) field_error("objective.samples_per_agent", "must be at least 1");
    if (!(o.heterogeneity >= 0.0)) field_error("objective.heterogeneity", "must be nonnegative");
    if (!(o.label_noise >= 0.0)) field_error("objective.label_noise", "must be nonnegative");
  } else {
    if (o.path.empty()) field_error("objective.path", "required when objective.source = libsvm");
    if (!std::filesystem::exists(resolve_path(c, o.path))) field_error("objective.path", "file does not exist");
  }

  if (c.noise.kind != NoiseKind::none) {
    if (!(c.noise.p > 1.0 && c.noise.p <= 2.0)) field_error("noise.p", "must lie in (1, 2]");
    if (!(c.noise.scale > 0.0)) field_error("noise.scale", "must be positive");
    if (!(c.noise.shape > 0.0)) field_error("noise.shape", "must be positive");
    if (c.noise.kind == NoiseKind::student_t && !(c.noise.p < c.noise.shape)) {
      field_error("noise.p", "must be below the degrees of freedom");
    }
    if (c.noise.kind == NoiseKind::pareto) {
      if (!(c.noise.p < c.noise.shape)) field_error("noise.p", "must be below the tail index");
      if (!c.noise.sigma) field_error("noise.sigma", "no closed form for pareto noise; give a value");
    }
    if (c.noise.sigma && !(*c.noise.sigma > 0.0)) field_error("noise.sigma", "must be positive");
  }

  const auto& s = c.schedule;
  if (s.horizon < 1) field_error("schedule.horizon", "must be at least 1");
  if (!(s.delta > 0.0 && s.delta < 1.0)) field_error("schedule.delta", "must lie in (0, 1)");
  if (!(s.m > 0.0)) field_error("schedule.m", "must be positive");
  if (!(s.b1 >= 1.0)) field_error("schedule.b1", "must be at least 1");
  if (!(s.lambda > 0.0)) field_error("schedule.lambda", "must be positive");
  if (!(s.kappa > 0.0)) field_error("schedule.kappa", "must be positive");
  if (!(s.alpha >= 0.0)) field_error("schedule.alpha", "must be nonnegative");

  if (c.run.n_seeds < 1) field_error("run.seeds", "need at least one seed");
  if (c.run.stride < 0) field_error("run.stride", "must be nonnegative (0 picks the default)");
  if (c.run.jobs < 1) field_error("run.jobs", "must be at least 1");
  if (!c.run.initial_states.empty() && !std::filesystem::exists(resolve_path(c, c.run.initial_states))) {
    field_error("run.initial_states", "file does not exist");
  }
}

GraphSchedule build_schedule(const ExperimentConfig& c) {
  const auto& g = c.graph;
  if (g.generator == "switching_ring") return switching_ring(g.n_agents, g.period);
  if (g.generator == "complete") return uniform_complete(g.n_agents);
  if (g.generator == "random") {
    Stream rng = substream(g.seed, 0, 0, StreamDomain::schedule_generator);
    return random_schedule(g.n_agents, g.period, g.weight_floor, rng);
  }
  return load_schedule_file(resolve_path(c, g.file));
}

NoiseModel build_noise(const ExperimentConfig& c, int dim) {
  const auto& n = c.noise;
  if (n.kind == NoiseKind::none) return NoiseModel::none();
  double sigma = 0.0;
  if (n.sigma) {
    sigma = *n.sigma;
  } else {
    auto declared = declared_sigma(n.kind, n.shape, n.scale, n.p, dim);
    if (!declared) field_error("noise.sigma", "cannot be derived for this noise kind");
    sigma = *declared;
  }
  switch (n.kind) {
    case NoiseKind::gaussian: return NoiseModel::gaussian(n.shape, n.scale, n.p, sigma);
    case NoiseKind::student_t: return NoiseModel::student_t(n.shape, n.scale, n.p, sigma);
    case NoiseKind::pareto: return NoiseModel::pareto(n.shape, n.pareto_scale, n.scale, n.p, sigma);
    case NoiseKind::none: break;
  }
  return NoiseModel::none();
}

ObjectiveSet build_objectives(const ExperimentConfig& c) {
  const auto& o = c.objective;
  const int n_agents = c.graph.generator == "file" ? build_schedule(c).n_agents() : c.graph.n_agents;
  if (o.source == "synthetic") {
    SyntheticSpec spec;
    spec.n_agents = n_agents;
    spec.dim = o.dim;
    spec.samples_per_agent = o.samples_per_agent;
    spec.heterogeneity = o.heterogeneity;
    spec.seed = o.data_seed;
    spec.ridge = o.ridge;
    spec.spectrum_decay = o.spectrum_decay;
    spec.label_noise = o.label_noise;
    return generate_synthetic(spec, build_noise(c, o.dim));
  }
  Dataset data = load_libsvm(resolve_path(c, o.path), o.max_rows, o.dim_cap);
  return partition(data, n_agents, o.partition, o.ridge, build_noise(c, static_cast<int>(data.features.cols())));
}

Problem build_problem(const ExperimentConfig& c) { return Problem::build(build_objectives(c), build_schedule(c)); }

StateMatrix build_initial_states(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.run.initial_states.empty()) {
    const int n = c.graph.generator == "file" ? build_schedule(c).n_agents() : c.graph.n_agents;
    const int d = c.objective.source == "synthetic" ? c.objective.dim : build_objectives(c).dim();
    return initial_states(n, d, seed);
  }
  const std::string path = resolve_path(c, c.run.initial_states);
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse_error, fmt::format("cannot open initial states '{}'", path));
  std::vector<std::vector<double>> rows;
  std::string text;
  int lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (trim(text).empty() || trim(text)[0] == '#') continue;
    std::istringstream ls(text);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(parse_number<double>(fmt::format("{}:{}", path, lineno), tok));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::malformed_input, fmt::format("{}:{}: ragged row", path, lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::malformed_input, fmt::format("{}: no states", path));
  StateMatrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return x;
}

ScheduleParams resolve_schedule(const ExperimentConfig& c, const Problem& problem) {
  if (!c.suggest_schedule) return c.schedule;
  ProblemConstants pc = problem_constants(problem, build_initial_states(c, c.run.seed));
  ScheduleParams s = suggest_params(pc, c.schedule.delta, c.schedule.horizon, c.schedule.b1);
  return s;
}

RunOptions run_options(const ExperimentConfig& c, Mode mode, std::uint64_t seed) {
  RunOptions o;
  o.mode = mode;
  o.seed = seed;
  o.stride = c.run.stride;
  if (!c.run.initial_states.empty()) o.initial_states = build_initial_states(c, seed);
  return o;
}

}  // namespace hclip
