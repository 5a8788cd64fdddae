// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <sstream>

#include "hclip/errors.hpp"
#include "hclip/noise.hpp"
#include "hclip/objectives.hpp"

namespace hclip {
namespace {

LocalObjective random_local(Stream& rng, int m, int d, double ridge) {
  Matrix x(m, d);
  Vector y(m);
  for (int r = 0; r < m; ++r) {
    for (int k = 0; k < d; ++k) x(r, k) = 2.0 * rng.uniform() - 1.0;
    y[r] = 2.0 * rng.uniform() - 1.0;
  }
  return LocalObjective(x, y, ridge);
}

Vector random_point(Stream& rng, int d, double r) {
  Vector v(d);
  for (int k = 0; k < d; ++k) v[k] = r * (2.0 * rng.uniform() - 1.0);
  return v;
}

TEST(Local, HandEvaluatedGradients) {
  LocalObjective zero(Matrix::Identity(2, 2), Vector::Zero(2), 0.3);
  EXPECT_EQ(zero.gradient(Vector::Zero(2)), Vector::Zero(2));
  Matrix x(1, 2);
  x << 1.0, 0.0;
  Vector y(1);
  y << 1.0;
  LocalObjective one(x, y, 0.0);
  Vector g = one.gradient(Vector::Zero(2));
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
  EXPECT_THROW(one.gradient(Vector::Zero(3)), Error);
}

TEST(Local, GradientMatchesCentralDifferences) {
  Stream rng(31);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 6;
    LocalObjective f = random_local(rng, 3 + trial % 5, d, 0.1 * (trial % 3));
    Vector w = random_point(rng, d, 2.0);
    Vector g = f.gradient(w);
    Vector fd(d);
    for (int k = 0; k < d; ++k) {
      Vector a = w, b = w;
      a[k] += h;
      b[k] -= h;
      fd[k] = (f.value(a) - f.value(b)) / (2 * h);
    }
    EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm())) << trial;
    Vector raw(d);
    f.gradient_into(w.data(), raw.data());
    EXPECT_EQ(raw, g);
  }
}

TEST(Local, SmoothnessMatchesEigenSolver) {
  Stream rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    LocalObjective f = random_local(rng, 40, 12, 0.05);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(f.gram());
    EXPECT_NEAR(f.smoothness(), eig.eigenvalues().maxCoeff() + 0.05, 1e-8 * f.smoothness());
  }
}

TEST(Local, QuadraticUpperBoundAndConvexity) {
  Stream rng(6);
  LocalObjective f = random_local(rng, 30, 5, 0.1);
  const double L = f.smoothness();
  ObjectiveSet set({f}, NoiseModel::none());
  const Optimum opt = solve_optimum(set);
  for (int k = 0; k < 1000; ++k) {
    Vector x = random_point(rng, 5, 3.0);
    Vector y = random_point(rng, 5, 3.0);
    const Vector g = f.gradient(x);
    EXPECT_LE(f.value(y), f.value(x) + g.dot(y - x) + 0.5 * L * (y - x).squaredNorm() + 1e-9);
    EXPECT_LE(f.value(x) - f.value(opt.x_star), g.dot(x - opt.x_star) + 1e-9);
  }
}

TEST(TopEigenvalue, AgreesWithDenseSolver) {
  Stream rng(12);
  Matrix a(30, 30);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) a(i, j) = rng.uniform() - 0.5;
  Matrix s = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  EXPECT_NEAR(top_eigenvalue(s), eig.eigenvalues().maxCoeff(), 1e-8 * eig.eigenvalues().maxCoeff());
  EXPECT_EQ(top_eigenvalue(Matrix::Zero(3, 3)), 0.0);
}

TEST(Set, NoisyGradientWithoutNoiseIsExact) {
  Stream rng(2);
  ObjectiveSet set({random_local(rng, 10, 4, 0.1), random_local(rng, 10, 4, 0.1)}, NoiseModel::none());
  Vector w = random_point(rng, 4, 1.0);
  Stream s(3);
  EXPECT_EQ(set.noisy_gradient(1, w, s), set.exact_gradient(1, w));
}

TEST(Set, NoisyGradientIsUnbiased) {
  Stream rng(2);
  const NoiseModel noise = NoiseModel::gaussian(1.0, 0.5, 2.0, 1.0);
  ObjectiveSet set({random_local(rng, 10, 4, 0.1)}, noise);
  Vector w = random_point(rng, 4, 1.0);
  const Vector exact = set.exact_gradient(0, w);
  Vector sum = Vector::Zero(4);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    Stream s = substream(1, static_cast<std::uint64_t>(k), 0, StreamDomain::monte_carlo);
    sum += set.noisy_gradient(0, w, s);
  }
  const double se = 0.5 / std::sqrt(static_cast<double>(n));
  EXPECT_LT(((sum / n) - exact).cwiseAbs().maxCoeff(), 4 * se);
}

TEST(Set, NoiseMomentCompositionMatchesNoiseModule) {
  Stream rng(2);
  const NoiseModel noise = NoiseModel::student_t(2.0, 0.2, 1.5, 1.0);
  ObjectiveSet set({random_local(rng, 10, 3, 0.1)}, noise);
  Vector w = random_point(rng, 3, 1.0);
  const Vector exact = set.exact_gradient(0, w);
  const int n = 100000;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    Stream s = substream(77, static_cast<std::uint64_t>(k), 0, StreamDomain::monte_carlo);
    acc += std::pow((set.noisy_gradient(0, w, s) - exact).norm(), 1.5);
  }
  MomentEstimate ref = estimate_p_moment(noise, 1.5, 3, n, 78, 300);
  EXPECT_LE(acc / n, ref.upper * 1.05);
  EXPECT_GE(acc / n, ref.lower * 0.95);
}

TEST(Optimum, ZeroLabelsGiveOrigin) {
  LocalObjective f(Matrix::Identity(3, 3), Vector::Zero(3), 0.2);
  Optimum opt = solve_optimum(ObjectiveSet({f, f}, NoiseModel::none()));
  EXPECT_LT(opt.x_star.norm(), 1e-15);
  EXPECT_LT(opt.b_star, 1e-15);
}

TEST(Optimum, HomogeneousAgentsShareTheMinimizer) {
  Stream rng(10);
  LocalObjective f = random_local(rng, 20, 5, 0.1);
  Optimum opt = solve_optimum(ObjectiveSet({f, f, f}, NoiseModel::none()));
  EXPECT_LE(opt.b_star, 1e-8);
}

TEST(Optimum, HeterogeneousStationarity) {
  Stream rng(10);
  ObjectiveSet set({random_local(rng, 20, 5, 0.1), random_local(rng, 20, 5, 0.1), random_local(rng, 20, 5, 0.1)},
                   NoiseModel::none());
  Optimum opt = solve_optimum(set);
  EXPECT_LE(set.global_gradient(opt.x_star).norm(), 1e-8);
  EXPECT_GT(opt.b_star, 1e-3);
  // Quadratic gap formula against direct evaluation.
  Vector x = random_point(rng, 5, 2.0);
  EXPECT_NEAR(opt.gap(x), set.value(x) - opt.f_star, 1e-10);
}

TEST(Optimum, SingularSystemIsIllPosed) {
  Matrix x(1, 2);
  x << 1.0, 1.0;
  LocalObjective f(x, Vector::Ones(1), 0.0);
  try {
    solve_optimum(ObjectiveSet({f}, NoiseModel::none()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ill_posed);
  }
}

TEST(Synthetic, DeterministicForSeed) {
  SyntheticSpec spec;
  ObjectiveSet a = generate_synthetic(spec, NoiseModel::none());
  ObjectiveSet b = generate_synthetic(spec, NoiseModel::none());
  ASSERT_EQ(a.n_agents(), 20);
  ASSERT_EQ(a.dim(), 50);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(a.local(i).features(), b.local(i).features());
    EXPECT_EQ(a.local(i).labels(), b.local(i).labels());
    EXPECT_EQ(a.local(i).samples(), 100);
  }
}

TEST(Synthetic, HeterogeneityRaisesLocalGradientsAtOptimum) {
  std::vector<double> low, high;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SyntheticSpec spec;
    spec.n_agents = 8;
    spec.dim = 10;
    spec.samples_per_agent = 40;
    spec.seed = seed;
    spec.heterogeneity = 0.0;
    low.push_back(solve_optimum(generate_synthetic(spec, NoiseModel::none())).b_star);
    spec.heterogeneity = 1.0;
    high.push_back(solve_optimum(generate_synthetic(spec, NoiseModel::none())).b_star);
  }
  std::sort(low.begin(), low.end());
  std::sort(high.begin(), high.end());
  EXPECT_LT(low[5], high[5]);
}

TEST(Libsvm, ParsesRowsAndIndices) {
  std::stringstream a("1 3:0.5\n");
  Dataset d = parse_libsvm(a, 0, 4);
  ASSERT_EQ(d.features.rows(), 1);
  ASSERT_EQ(d.features.cols(), 4);
  EXPECT_EQ(d.features(0, 2), 0.5);
  EXPECT_EQ(d.features.row(0).sum(), 0.5);
  EXPECT_EQ(d.labels[0], 1.0);

  std::stringstream b("+1 1:1 2:2\n# comment\n-1 qid:3 2:4\n");
  Dataset e = parse_libsvm(b, 0, 0);
  ASSERT_EQ(e.features.rows(), 2);
  ASSERT_EQ(e.features.cols(), 2);
  EXPECT_EQ(e.features(0, 0), 1.0);
  EXPECT_EQ(e.features(0, 1), 2.0);
  EXPECT_EQ(e.labels[0], 1.0);
  EXPECT_EQ(e.labels[1], 0.0);  // {-1, 1} labels map to {0, 1}

  std::stringstream empty("");
  EXPECT_EQ(parse_libsvm(empty, 0, 0).features.rows(), 0);

  std::stringstream capped("2 1:1 2:1\n3 1:1\n4 1:1\n");
  Dataset c = parse_libsvm(capped, 2, 0);
  EXPECT_EQ(c.features.rows(), 2);
  EXPECT_EQ(c.labels[1], 3.0);
}

TEST(Libsvm, ErrorsCarryLineNumbers) {
  std::stringstream bad("1 1:1\n1 0:2\n");
  try {
    parse_libsvm(bad, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse_error);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::stringstream garbage("1 a:b\n");
  EXPECT_THROW(parse_libsvm(garbage, 0, 0), Error);
}

TEST(Partition, PoliciesSplitRowsAsDocumented) {
  auto rr = partition_rows(6, 3, PartitionPolicy::round_robin);
  EXPECT_EQ(rr, (std::vector<std::vector<int>>{{0, 3}, {1, 4}, {2, 5}}));
  auto cg = partition_rows(7, 3, PartitionPolicy::contiguous);
  ASSERT_EQ(cg.size(), 3u);
  EXPECT_EQ(cg[0].size(), 3u);
  EXPECT_EQ(cg[1].size(), 2u);
  EXPECT_EQ(cg[2].size(), 2u);
  EXPECT_EQ(cg[0], (std::vector<int>{0, 1, 2}));
  EXPECT_THROW(partition_rows(2, 3, PartitionPolicy::contiguous), Error);
}

TEST(Partition, EqualPartsReproduceTheGlobalObjective) {
  Stream rng(3);
  LocalObjective whole = random_local(rng, 12, 4, 0.1);
  Dataset data{whole.features(), whole.labels()};
  ObjectiveSet parts = partition(data, 4, PartitionPolicy::round_robin, 0.1, NoiseModel::none());
  Vector w = random_point(rng, 4, 1.0);
  EXPECT_LT((parts.global_gradient(w) - whole.gradient(w)).norm(), 1e-12);
  EXPECT_NEAR(parts.value(w), whole.value(w), 1e-12);
}

}  // namespace
}  // namespace hclip
