// SPDX-License-Identifier: Apache-2.0
// Serial reference kernels against their OpenMP counterparts on the
// example1-desk problem shape, plus a full iteration loop.
#include <benchmark/benchmark.h>

#include <vector>

#include "hclip/engine.hpp"
#include "hclip/kernels.hpp"
#include "hclip/noise.hpp"

namespace {

using hclip::kernels::Exec;

struct Fixture {
  hclip::Problem problem;
  hclip::StateMatrix x;
  hclip::StateMatrix y;
  hclip::StateMatrix next;
  hclip::Vector centered;
  std::vector<hclip::kernels::AgentStats> stats;

  explicit Fixture(int n_agents)
      : problem(make_problem(n_agents)),
        x(hclip::initial_states(n_agents, 50, 7)),
        y(x),
        next(x),
        centered(hclip::Vector::Zero(50)),
        stats(static_cast<std::size_t>(n_agents)) {}

  static hclip::Problem make_problem(int n_agents) {
    hclip::SyntheticSpec spec;
    spec.n_agents = n_agents;
    auto noise = hclip::NoiseModel::student_t(2.0, 0.2, 1.5, 1.0);
    return hclip::Problem::build(hclip::generate_synthetic(spec, noise), hclip::switching_ring(n_agents, 4));
  }
};

Exec exec_of(const benchmark::State& state) { return state.range(1) == 0 ? Exec::serial : Exec::parallel; }

void BM_Mix(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const Exec exec = exec_of(state);
  const hclip::Matrix& w = f.problem.schedule.at(1);
  for (auto _ : state) {
    hclip::kernels::mix(exec, w, f.x, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
}

void BM_LocalStep(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const Exec exec = exec_of(state);
  std::int64_t t = 1;
  for (auto _ : state) {
    hclip::kernels::LocalStepConfig cfg{0.01, 2.0, true, 3, t++};
    hclip::kernels::LocalStepInputs in{f.problem.objectives, cfg, f.x, f.y, f.centered};
    hclip::kernels::local_step(exec, in, f.next, nullptr, f.stats);
    benchmark::DoNotOptimize(f.next.data());
  }
}

void BM_Run(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  hclip::ScheduleParams params = hclip::ScheduleParams::example1();
  params.horizon = 200;
  hclip::RunOptions opts;
  opts.exec = exec_of(state);
  opts.seed = 5;
  for (auto _ : state) {
    auto rec = hclip::run(f.problem, params, opts);
    benchmark::DoNotOptimize(rec.rows.back().fbar_gap);
  }
}

void shapes(benchmark::internal::Benchmark* b) {
  for (int n : {20, 80}) {
    b->Args({n, 0});
    b->Args({n, 1});
  }
  b->ArgNames({"agents", "parallel"});
}

}  // namespace

BENCHMARK(BM_Mix)->Apply(shapes);
BENCHMARK(BM_LocalStep)->Apply(shapes);
BENCHMARK(BM_Run)->Apply(shapes)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
