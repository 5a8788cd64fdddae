// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <regex>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hclip/analysis.hpp"
#include "hclip/config.hpp"
#include "hclip/errors.hpp"
#include "hclip/record_io.hpp"

namespace hclip::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::optional<int> jobs;
  std::string out;
};

ExperimentConfig load(const Common& o) {
  if (o.config.empty()) fail(ErrorKind::parse_error, "--config is required");
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) {
    overrides.push_back(fmt::format("run.seed={}", *o.seed));
    if (o.seeds.empty()) overrides.push_back("run.seeds=1");
  }
  if (!o.seeds.empty()) overrides.push_back("run.seeds=" + o.seeds);
  if (o.jobs) overrides.push_back(fmt::format("run.jobs={}", *o.jobs));
  return load_config(o.config, overrides);
}

std::string output_root(const Common& o, const ExperimentConfig& c) {
  if (!o.out.empty()) return o.out;
  if (!c.run.out_dir.empty()) return c.run.out_dir;
  if (const char* env = std::getenv("HCLIP_DGD_OUT"); env && *env) return env;
  return "hclip-out";
}

std::string seed_stem(Mode mode, std::uint64_t seed) { return fmt::format("{}_seed{}", to_string(mode), seed); }

int cmd_run(const Common& o, std::ostream& out) {
  const ExperimentConfig c = load(o);
  const Problem problem = build_problem(c);
  const ScheduleParams params = resolve_schedule(c, problem);
  const std::string root = output_root(o, c);
  fs::create_directories(root);

  std::string summary = "mode,t,run_avg_gap_q0.1,run_avg_gap_q0.5,run_avg_gap_q0.9\n";
  for (Mode mode : c.modes()) {
    RunOptions opts = run_options(c, mode, c.run.seed);
    std::vector<RunRecord> records = run_ensemble(problem, params, opts, c.run.seed, c.run.n_seeds, c.run.jobs);
    std::vector<const RunRecord*> ptrs;
    std::vector<double> finals;
    for (const RunRecord& r : records) {
      const std::string stem = (fs::path(root) / seed_stem(mode, r.seed)).string();
      write_file_atomic(stem + ".csv", run_csv(r, problem));
      write_file_atomic(stem + ".meta", run_sidecar(r, params.delta));
      ptrs.push_back(&r);
      finals.push_back(r.rows.back().run_avg_gap);
    }
    std::string q = quantile_csv(ptrs, "run_avg_gap", {0.1, 0.5, 0.9});
    std::istringstream lines(q);
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) summary += fmt::format("{},{}\n", to_string(mode), line);
    fmt::print(out, "{}: {} seed(s), median final running-average gap {:.6g}\n", to_string(mode), records.size(),
               nearest_rank_quantile(finals, 0.5));
  }
  write_file_atomic((fs::path(root) / "summary.csv").string(), summary);
  fmt::print(out, "wrote {}\n", root);
  return ok;
}

struct VerifyOptions {
  int max_gap = 200;
  int trials = 50;
  std::int64_t samples = 100000;
  int pairs = 20;
};

int verify_lemma1(const ExperimentConfig& c, const VerifyOptions& v, std::ostream& out) {
  const GraphSchedule schedule = build_schedule(c);
  const ValidationReport vr = validate_schedule(
      schedule, static_cast<std::int64_t>(schedule.cycle_length()) + schedule.period());
  if (!vr.pass) {
    fail(ErrorKind::precondition_violation,
         fmt::format("schedule fails {} at t = {}: {}", to_string(vr.clause), vr.time, vr.detail));
  }
  const Lemma1Report rep = verify_lemma1(schedule, v.max_gap, v.trials, c.run.seed);
  fmt::print(out,
             "transition-product: {} entries checked (gamma {:.6g}, beta {:.6g}), {} violations, worst margin "
             "{:.6g} at k = {} s = {} ({}, {})\n",
             rep.checked, rep.constants.gamma, rep.constants.beta, rep.violations, rep.worst_margin, rep.worst_k,
             rep.worst_s, rep.worst_i, rep.worst_j);
  return rep.violations == 0 ? ok : violations;
}

/// Stride-1 clipped runs over the configured seeds.
std::vector<RunRecord> trajectories(const ExperimentConfig& c, const Problem& problem) {
  const ScheduleParams params = resolve_schedule(c, problem);
  RunOptions opts = run_options(c, Mode::clipped, c.run.seed);
  opts.stride = 1;
  return run_ensemble(problem, params, opts, c.run.seed, c.run.n_seeds, c.run.jobs);
}

int verify_trajectory(const ExperimentConfig& c, bool network, bool gradient, std::ostream& out) {
  const Problem problem = build_problem(c);
  const std::vector<RunRecord> records = trajectories(c, problem);
  int code = ok;
  if (network) {
    std::int64_t checked = 0, bad = 0;
    const BoundCheckReport* worst = nullptr;
    std::vector<BoundCheckReport> reps;
    for (const RunRecord& r : records) reps.push_back(check_lemma2(r, problem));
    for (std::size_t k = 0; k < reps.size(); ++k) {
      checked += reps[k].checked;
      bad += reps[k].violations;
      if (!worst || reps[k].worst_margin > worst->worst_margin) worst = &reps[k];
    }
    fmt::print(out, "network-error: {} runs, {} (agent, t) checked, {} violations; worst: seed {} {}\n",
               records.size(), checked, bad, records[static_cast<std::size_t>(worst - reps.data())].seed,
               worst->summary());
    if (bad > 0) code = violations;
  }
  if (gradient) {
    std::int64_t checked = 0, bad = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();
    std::string worst_text;
    int half_held = 0;
    for (const RunRecord& r : records) {
      const Eq6Report e = check_eq6(r, problem);
      checked += e.bounds.checked;
      bad += e.bounds.violations;
      half_held += e.half_threshold_held ? 1 : 0;
      if (e.bounds.worst_margin > worst_margin) {
        worst_margin = e.bounds.worst_margin;
        worst_text = fmt::format("seed {} {}", r.seed, e.bounds.summary());
      }
    }
    fmt::print(out, "gradient-bound: {} runs, {} checked, {} violations; ||grad|| <= lambda_t/2 throughout on {} runs; "
               "worst: {}\n",
               records.size(), checked, bad, half_held, worst_text);
    if (bad > 0) code = violations;
  }
  return code;
}

int verify_lemma5(const ExperimentConfig& c, const VerifyOptions& v, std::ostream& out) {
  const Problem problem = build_problem(c);
  const ObjectiveSet& obj = problem.objectives;
  if (obj.noise().kind == NoiseKind::none) fail(ErrorKind::invalid_argument, "clip split check needs noise");
  int failures = 0;
  for (int k = 0; k < v.pairs; ++k) {
    Stream rng = substream(c.run.seed, static_cast<std::uint64_t>(k), std::uint64_t{1} << 32,
                           StreamDomain::monte_carlo);
    const int agent = static_cast<int>(rng() % static_cast<std::uint64_t>(obj.n_agents()));
    const double radius = 2.0 * rng.uniform();
    Vector point = problem.optimum.x_star;
    for (int j = 0; j < obj.dim(); ++j) point[j] += radius * (2.0 * rng.uniform() - 1.0);
    const double g = obj.exact_gradient(agent, point).norm();
    const double lambda = 2.0 * g + 1.0 + 9.0 * rng.uniform();
    const Lemma5Report rep = check_lemma5_monte_carlo(obj, agent, point, obj.noise(), lambda, v.samples,
                                                      c.run.seed + static_cast<std::uint64_t>(k));
    fmt::print(out, "pair {:2d} agent {:2d}: {}\n", k, agent, rep.summary());
    if (!rep.pass()) ++failures;
  }
  fmt::print(out, "clip-split: {} of {} pairs failed\n", failures, v.pairs);
  return failures == 0 ? ok : violations;
}

int verify_condition(const ExperimentConfig& c, std::ostream& out) {
  const Problem problem = build_problem(c);
  const ScheduleParams params = resolve_schedule(c, problem);
  const ProblemConstants pc = problem_constants(problem, build_initial_states(c, c.run.seed));
  const ConditionReport rep = check_condition7(params, pc);
  out << rep.to_text();
  return rep.feasible() ? ok : violations;
}

int cmd_verify(const std::string& suite, const Common& o, const VerifyOptions& v, std::ostream& out) {
  const ExperimentConfig c = load(o);
  if (suite == "lemma1") return verify_lemma1(c, v, out);
  if (suite == "lemma2") return verify_trajectory(c, true, false, out);
  if (suite == "eq6") return verify_trajectory(c, false, true, out);
  if (suite == "lemma5") return verify_lemma5(c, v, out);
  if (suite == "condition7") return verify_condition(c, out);
  // all
  int code = ok;
  for (int r : {verify_lemma1(c, v, out), verify_trajectory(c, true, true, out), verify_lemma5(c, v, out),
                verify_condition(c, out)}) {
    code = std::max(code, r);
  }
  return code;
}

int cmd_plotdata(const std::string& dir, const std::string& metric, const std::vector<double>& quantiles, bool log_y,
                 const std::string& out_dir, std::ostream& out) {
  if (!fs::is_directory(dir)) fail(ErrorKind::invalid_argument, fmt::format("'{}' is not a directory", dir));
  const std::regex name_re(R"((clipped|baseline)_seed(\d+)\.csv)");
  std::map<std::string, std::vector<std::pair<std::uint64_t, std::string>>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, name_re)) files[m[1]].emplace_back(std::stoull(m[2]), entry.path().string());
  }
  if (files.empty()) fail(ErrorKind::invalid_argument, fmt::format("no run CSVs in '{}'", dir));
  const std::string target = out_dir.empty() ? dir : out_dir;
  fs::create_directories(target);

  std::vector<SvgSeries> series;
  for (auto& [mode, list] : files) {
    std::sort(list.begin(), list.end());
    std::vector<std::vector<double>> cols;
    std::vector<double> t;
    for (const auto& [seed, path] : list) {
      const CsvTable table = read_csv(path);
      const std::size_t ti = table.column("t");
      const std::size_t mi = table.column(metric);
      std::vector<double> tv, mv;
      for (const auto& row : table.rows) {
        tv.push_back(row[ti]);
        mv.push_back(row[mi]);
      }
      if (t.empty()) t = tv;
      if (tv != t) fail(ErrorKind::invalid_argument, fmt::format("'{}' has a different time grid", path));
      cols.push_back(std::move(mv));
    }
    for (double q : quantiles) {
      SvgSeries s;
      s.label = fmt::format("{} q{:g}", mode, q);
      std::string text = fmt::format("t,{}\n", metric);
      std::vector<double> column(cols.size());
      for (std::size_t r = 0; r < t.size(); ++r) {
        for (std::size_t k = 0; k < cols.size(); ++k) column[k] = cols[k][r];
        const double v = nearest_rank_quantile(column, q);
        s.x.push_back(t[r]);
        s.y.push_back(v);
        text += fmt::format("{},{:.17g}\n", static_cast<std::int64_t>(t[r]), v);
      }
      const std::string path = (fs::path(target) / fmt::format("{}_{}_q{:g}.csv", metric, mode, q)).string();
      write_file_atomic(path, text);
      fmt::print(out, "{}: {} seed(s) -> {}\n", s.label, cols.size(), path);
      series.push_back(std::move(s));
    }
  }
  const std::string svg = (fs::path(target) / fmt::format("{}.svg", metric)).string();
  write_file_atomic(svg, svg_line_chart(series, metric, log_y));
  fmt::print(out, "chart -> {}\n", svg);
  return ok;
}

int cmd_suggest(const Common& o, std::ostream& out) {
  ExperimentConfig c = load(o);
  const Problem problem = build_problem(c);
  const ProblemConstants pc = problem_constants(problem, build_initial_states(c, c.run.seed));
  const ScheduleParams s = suggest_params(pc, c.schedule.delta, c.schedule.horizon, c.schedule.b1);
  fmt::print(out, "[schedule]\nkappa = {:.17g}\nalpha = {:.17g}\nm = {:.17g}\nb1 = {:.17g}\nlambda = {:.17g}\n"
             "horizon = {}\ndelta = {:.17g}\n\n",
             s.kappa, s.alpha, s.m, s.b1, s.lambda, s.horizon, s.delta);
  const ConditionReport rep = check_condition7(s, pc);
  out << rep.to_text();
  return rep.feasible() ? ok : violations;
}

int cmd_validate_graph(const Common& o, const std::string& schedule_file, std::int64_t horizon, std::ostream& out) {
  GraphSchedule schedule = [&] {
    if (!schedule_file.empty()) return load_schedule_file(schedule_file);
    return build_schedule(load(o));
  }();
  if (horizon <= 0) horizon = static_cast<std::int64_t>(schedule.cycle_length()) + schedule.period();
  const ValidationReport rep = validate_schedule(schedule, horizon);
  if (rep.pass) {
    const ContractionConstants cc = contraction_constants(schedule);
    fmt::print(out, "valid: N = {}, B = {}, eta = {:.6g}, {} matrices per cycle, gamma = {:.10g}, beta = {:.10g}\n",
               schedule.n_agents(), schedule.period(), schedule.weight_floor(), schedule.cycle_length(), cc.gamma,
               cc.beta);
    return ok;
  }
  fmt::print(out, "invalid: {} at t = {}: {}\n", to_string(rep.clause), rep.time, rep.detail);
  return violations;
}

void add_common(CLI::App* app, Common& o, bool run_flags) {
  app->add_option("--config", o.config, "Experiment config (INI)");
  app->add_option("--override", o.overrides, "section.key=value, repeatable")->take_all();
  if (run_flags) {
    app->add_option("--seed", o.seed, "Single seed");
    app->add_option("--seeds", o.seeds, "Seed range N..M");
    app->add_option("--jobs", o.jobs, "Seeds run concurrently");
    app->add_option("--out", o.out, "Output directory");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed clipped SGD over time-varying graphs", "hclip-dgd"};
  app.require_subcommand(1);

  Common run_o, verify_o, suggest_o, graph_o;
  CLI::App* run_cmd = app.add_subcommand("run", "Run the configured ensemble and write CSVs");
  add_common(run_cmd, run_o, true);

  std::string suite;
  VerifyOptions vopt;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Check bounds along runs or on the graph");
  verify_cmd->add_option("suite", suite, "lemma1 | lemma2 | lemma5 | eq6 | condition7 | all")
      ->required()
      ->check(CLI::IsMember({"lemma1", "lemma2", "lemma5", "eq6", "condition7", "all"}));
  add_common(verify_cmd, verify_o, true);
  verify_cmd->add_option("--max-gap", vopt.max_gap, "Largest k - s for lemma1");
  verify_cmd->add_option("--trials", vopt.trials, "Random start times for lemma1");
  verify_cmd->add_option("--samples", vopt.samples, "Monte Carlo samples per pair for lemma5");
  verify_cmd->add_option("--pairs", vopt.pairs, "(point, lambda) pairs for lemma5");

  std::string plot_dir, metric = "run_avg_gap", plot_out;
  std::vector<double> quantiles{0.5};
  bool log_y = false;
  CLI::App* plot_cmd = app.add_subcommand("plotdata", "Quantile series and an SVG chart from run CSVs");
  plot_cmd->add_option("--dir", plot_dir, "Directory with run CSVs")->required();
  plot_cmd->add_option("--metric", metric, "CSV column");
  plot_cmd->add_option("--quantiles", quantiles, "Comma separated")->delimiter(',');
  plot_cmd->add_flag("--log-y", log_y, "Log-scale y axis");
  plot_cmd->add_option("--out", plot_out, "Output directory (default: --dir)");

  CLI::App* suggest_cmd = app.add_subcommand("suggest-params", "Feasible step/clip parameters for a config");
  add_common(suggest_cmd, suggest_o, false);

  std::string schedule_file;
  std::int64_t horizon = 0;
  CLI::App* graph_cmd = app.add_subcommand("validate-graph", "Check the mixing schedule contract");
  add_common(graph_cmd, graph_o, false);
  graph_cmd->add_option("--schedule", schedule_file, "Schedule file instead of a config");
  graph_cmd->add_option("--horizon", horizon, "Steps to check (default: one cycle plus B)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : bad_input;
  }

  try {
    if (*run_cmd) return cmd_run(run_o, out);
    if (*verify_cmd) return cmd_verify(suite, verify_o, vopt, out);
    if (*plot_cmd) return cmd_plotdata(plot_dir, metric, quantiles, log_y, plot_out, out);
    if (*suggest_cmd) return cmd_suggest(suggest_o, out);
    if (*graph_cmd) return cmd_validate_graph(graph_o, schedule_file, horizon, out);
  } catch (const NumericalFailure& e) {
    fmt::print(err, "numerical failure at iteration {}: {}\n", e.iteration(), e.what());
    return numerical;
  } catch (const Error& e) {
    fmt::print(err, "error ({}): {}\n", to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::infeasible_constants ? violations : bad_input;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return bad_input;
  }
  return bad_input;
}

}  // namespace hclip::cli
