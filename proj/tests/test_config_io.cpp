// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hclip/config.hpp"
#include "hclip/errors.hpp"
#include "hclip/record_io.hpp"

#ifndef HCLIP_PRESET_DIR
#error "HCLIP_PRESET_DIR must point at presets/"
#endif

namespace hclip {
namespace {

namespace fs = std::filesystem;

std::string preset(const char* name) { return std::string(HCLIP_PRESET_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("hclip_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Config, PresetLoadsWithDocumentedValues) {
  ExperimentConfig c = load_config(preset("example1-desk.ini"));
  EXPECT_EQ(c.graph.generator, "switching_ring");
  EXPECT_EQ(c.graph.n_agents, 20);
  EXPECT_EQ(c.graph.period, 4);
  EXPECT_EQ(c.objective.dim, 50);
  EXPECT_EQ(c.objective.samples_per_agent * c.graph.n_agents, 2000);
  EXPECT_EQ(c.objective.ridge, 0.1);
  EXPECT_EQ(c.noise.kind, NoiseKind::student_t);
  EXPECT_EQ(c.noise.scale, 0.2);
  EXPECT_FALSE(c.noise.sigma);
  EXPECT_EQ(c.schedule, ScheduleParams::example1());
  EXPECT_EQ(c.run.modes, ModeSelection::both);
  ExperimentConfig c2 = load_config(preset("example2-desk.ini"));
  EXPECT_EQ(c2.schedule, ScheduleParams::example2());
}

TEST(Config, RoundTrip) {
  ExperimentConfig c = load_config(preset("example1-desk.ini"), {"noise.sigma=3.5", "run.seeds=4..9"});
  const std::string text = serialize_config(c);
  ExperimentConfig back = parse_config(text, {}, c.base_dir);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.run.seed, 4u);
  EXPECT_EQ(back.run.n_seeds, 6);
}

TEST(Config, OverridesApplyBeforeValidation) {
  ExperimentConfig c = load_config(preset("example1-desk.ini"), {"schedule.horizon=7", "run.mode=clipped"});
  EXPECT_EQ(c.schedule.horizon, 7);
  EXPECT_EQ(c.modes(), std::vector<Mode>{Mode::clipped});
  EXPECT_THROW(load_config(preset("example1-desk.ini"), {"schedule.horizon=0"}), Error);
  EXPECT_THROW(load_config(preset("example1-desk.ini"), {"schedule.bogus=1"}), Error);
  EXPECT_THROW(load_config(preset("example1-desk.ini"), {"nodot=1"}), Error);
}

TEST(Config, ErrorsNameTheFieldOrLine) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::parse_error);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("[schedule]\ndelta = 2\n").find("schedule.delta"), std::string::npos);
  EXPECT_NE(message("[schedule]\nkappa = abc\n").find("schedule.kappa"), std::string::npos);
  EXPECT_NE(message("[graph]\nsize = 3\n").find("graph.size"), std::string::npos);
  EXPECT_NE(message("[weird]\nx = 1\n").find("weird"), std::string::npos);
  EXPECT_NE(message("[graph]\nn_agents = 3\n[graph\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("[graph]\ngenerator = file\nfile = /nonexistent/x\n").find("graph.file"), std::string::npos);
  EXPECT_NE(message("[noise]\nkind = student_t\nshape = 1.5\np = 1.5\n").find("noise.p"), std::string::npos);
}

TEST(Config, BuildsTheProblem) {
  ExperimentConfig c = load_config(preset("example1-desk.ini"));
  Problem prob = build_problem(c);
  EXPECT_EQ(prob.objectives.n_agents(), 20);
  EXPECT_EQ(prob.objectives.dim(), 50);
  EXPECT_GT(prob.objectives.noise().sigma, 0.0);
  EXPECT_EQ(prob.schedule.period(), 4);
}

TEST(Config, ScheduleFileAndLibsvmSources) {
  fs::path dir = scratch("sources");
  save_schedule_file((dir / "ring.txt").string(), switching_ring(4, 2));
  {
    std::ofstream f(dir / "data.svm");
    for (int r = 0; r < 40; ++r) f << (r % 2 ? "+1" : "-1") << " 1:" << 0.1 * r << " 3:" << 1.0 - 0.02 * r << "\n";
  }
  {
    std::ofstream f(dir / "x0.txt");
    for (int i = 0; i < 4; ++i) f << i << " 0 " << -i << "\n";
  }
  std::ofstream(dir / "exp.ini") << "[graph]\ngenerator = file\nfile = ring.txt\n"
                                    "[objective]\nsource = libsvm\npath = data.svm\npartition = round_robin\n"
                                    "[noise]\nkind = none\n"
                                    "[run]\ninitial_states = x0.txt\n";
  ExperimentConfig c = load_config((dir / "exp.ini").string());
  Problem prob = build_problem(c);
  EXPECT_EQ(prob.objectives.n_agents(), 4);
  EXPECT_EQ(prob.objectives.dim(), 3);
  StateMatrix x0 = build_initial_states(c, 1);
  EXPECT_EQ(x0(3, 2), -3.0);
  RunOptions o = run_options(c, Mode::clipped, 1);
  ASSERT_TRUE(o.initial_states);
  EXPECT_EQ(*o.initial_states, x0);
}

TEST(RecordIo, CsvHeaderRowsAndDeterminism) {
  ExperimentConfig c = load_config(preset("example1-desk.ini"), {"schedule.horizon=25"});
  Problem prob = build_problem(c);
  RunRecord r = run_clipped(prob, c.schedule, run_options(c, Mode::clipped, 1));
  const std::string text = run_csv(r, prob);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "t,fbar_gap,run_avg_gap,consensus_max,z_t,delta_t,theta_acc,diag_eta,diag_lambda,diag_clip_count,"
            "diag_max_grad_norm,diag_max_used_grad_norm,diag_max_theta_norm,diag_network_bound,"
            "diag_gradient_bound_margin");
  CsvTable t = parse_csv(text);
  ASSERT_EQ(t.rows.size(), 25u);
  const auto gi = t.column("run_avg_gap");
  const auto ni = t.column("diag_network_bound");
  const auto ci = t.column("consensus_max");
  const auto ei = t.column("diag_gradient_bound_margin");
  for (std::size_t k = 0; k < 25; ++k) {
    EXPECT_EQ(t.rows[k][gi], r.rows[k].run_avg_gap);  // %.17g round-trips exactly
    EXPECT_LE(t.rows[k][ci], t.rows[k][ni]);
    EXPECT_LE(t.rows[k][ei], 1e-9);
  }
  RunRecord again = run_clipped(prob, c.schedule, run_options(c, Mode::clipped, 1));
  EXPECT_EQ(run_csv(again, prob), text);
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

TEST(RecordIo, SidecarAndAtomicWrite) {
  ExperimentConfig c = load_config(preset("example1-desk.ini"), {"schedule.horizon=10"});
  Problem prob = build_problem(c);
  RunRecord r = run_clipped(prob, c.schedule, run_options(c, Mode::clipped, 5));
  auto kv = parse_sidecar(run_sidecar(r, 0.1));
  EXPECT_EQ(kv["seed"], "5");
  EXPECT_EQ(kv["mode"], "clipped");
  EXPECT_EQ(kv["horizon"], "10");
  EXPECT_FALSE(kv["condition_digest"].empty());
  fs::path dir = scratch("atomic");
  const std::string path = (dir / "sub" / "f.txt").string();
  write_file_atomic(path, "one\n");
  write_file_atomic(path, "two\n");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "two");
  EXPECT_FALSE(fs::exists(path + ".tmp"));
}

TEST(RecordIo, CsvParserRejectsRaggedRows) {
  EXPECT_THROW(parse_csv("a,b\n1,2\n3\n"), Error);
  EXPECT_THROW(parse_csv("a\nx\n"), Error);
  EXPECT_THROW(parse_csv(""), Error);
}

TEST(RecordIo, QuantileCsvAndSvg) {
  ExperimentConfig c = load_config(preset("example1-desk.ini"), {"schedule.horizon=30"});
  Problem prob = build_problem(c);
  auto recs = run_ensemble(prob, c.schedule, RunOptions{}, 1, 5, 1);
  std::vector<const RunRecord*> ptrs;
  for (const auto& r : recs) ptrs.push_back(&r);
  CsvTable q = parse_csv(quantile_csv(ptrs, "run_avg_gap", {0.1, 0.5, 0.9}));
  ASSERT_EQ(q.header.size(), 4u);
  for (const auto& row : q.rows) {
    EXPECT_LE(row[1], row[2]);
    EXPECT_LE(row[2], row[3]);
  }
  SvgSeries s{"median", {1, 2, 3}, {1.0, 0.5, 0.25}};
  const std::string svg = svg_line_chart({s}, "gap", true);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

}  // namespace
}  // namespace hclip
