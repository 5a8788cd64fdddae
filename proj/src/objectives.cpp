// SPDX-License-Identifier: Apache-2.0
#include "hclip/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "hclip/errors.hpp"

namespace hclip {

double top_eigenvalue(const Matrix& sym, double tol) {
  const Eigen::Index n = sym.rows();
  if (n == 0) return 0.0;
  // Deterministic, non-degenerate start vector.
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = 1.0 + 0.01 * static_cast<double>(k % 7);
  v.normalize();
  double previous = 0.0;
  double rho = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Vector w = sym * v;
    rho = v.dot(w);
    if (rho <= 0.0) return 0.0;
    double residual = (w - rho * v).norm();
    if (iter > 0 && residual <= 1e-5 * rho && std::abs(rho - previous) <= tol * rho) return rho;
    previous = rho;
    v = w / w.norm();
  }
  return rho;
}

LocalObjective::LocalObjective(Matrix features, Vector labels, double ridge)
    : features_(std::move(features)), labels_(std::move(labels)), ridge_(ridge) {
  if (features_.rows() != labels_.size()) {
    fail(ErrorKind::malformed_input, fmt::format("{} feature rows but {} labels", features_.rows(), labels_.size()));
  }
  if (features_.rows() == 0) fail(ErrorKind::malformed_input, "local objective needs at least one sample");
  if (features_.cols() == 0) fail(ErrorKind::malformed_input, "local objective needs at least one feature");
  if (!(ridge_ >= 0.0)) fail(ErrorKind::invalid_argument, "ridge must be nonnegative");
  const double m = static_cast<double>(features_.rows());
  gram_ = (features_.transpose() * features_) / m;
  moment_ = (features_.transpose() * labels_) / m;
  smoothness_ = top_eigenvalue(gram_) + ridge_;
}

double LocalObjective::value(const Vector& w) const {
  if (w.size() != features_.cols()) fail(ErrorKind::malformed_input, "point has wrong dimension");
  Vector r = features_ * w - labels_;
  return 0.5 * r.squaredNorm() / static_cast<double>(features_.rows()) + 0.5 * ridge_ * w.squaredNorm();
}

Vector LocalObjective::gradient(const Vector& w) const {
  if (w.size() != features_.cols()) fail(ErrorKind::malformed_input, "point has wrong dimension");
  Vector out(w.size());
  gradient_into(w.data(), out.data());
  return out;
}

void LocalObjective::gradient_into(const double* w, double* out) const {
  const Eigen::Index d = gram_.rows();
  Eigen::Map<const Vector> wv(w, d);
  Eigen::Map<Vector> ov(out, d);
  ov.noalias() = gram_ * wv;
  ov -= moment_;
  ov += ridge_ * wv;
}

ObjectiveSet::ObjectiveSet(std::vector<LocalObjective> locals, NoiseModel noise)
    : locals_(std::move(locals)), noise_(noise), dim_(0) {
  if (locals_.empty()) fail(ErrorKind::invalid_argument, "objective set needs at least one agent");
  dim_ = locals_.front().dim();
  for (const auto& l : locals_) {
    if (l.dim() != dim_) fail(ErrorKind::malformed_input, "local objectives disagree on dimension");
  }
  noise_.validate();
}

const LocalObjective& ObjectiveSet::local(int agent) const {
  if (agent < 0 || agent >= n_agents()) fail(ErrorKind::invalid_argument, fmt::format("no agent {}", agent));
  return locals_[static_cast<std::size_t>(agent)];
}

ObjectiveSet ObjectiveSet::with_noise(NoiseModel noise) const { return ObjectiveSet(locals_, noise); }

Vector ObjectiveSet::exact_gradient(int agent, const Vector& point) const {
  return local(agent).gradient(point);
}

Vector ObjectiveSet::noisy_gradient(int agent, const Vector& point, Stream& rng) const {
  Vector g = exact_gradient(agent, point);
  Vector xi = sample(noise_, dim_, rng);
  return g + xi;
}

double ObjectiveSet::value(const Vector& point) const {
  double total = 0.0;
  for (const auto& l : locals_) total += l.value(point);
  return total / static_cast<double>(locals_.size());
}

Vector ObjectiveSet::global_gradient(const Vector& point) const {
  Vector total = Vector::Zero(dim_);
  for (const auto& l : locals_) total += l.gradient(point);
  return total / static_cast<double>(locals_.size());
}

double ObjectiveSet::smoothness() const noexcept {
  double best = 0.0;
  for (const auto& l : locals_) best = std::max(best, l.smoothness());
  return best;
}

double Optimum::gap(const Vector& x) const {
  Vector e = x - x_star;
  return 0.5 * e.dot(hessian * e);
}

Optimum solve_optimum(const ObjectiveSet& set) {
  const int d = set.dim();
  const double n = static_cast<double>(set.n_agents());
  Matrix h = Matrix::Zero(d, d);
  Vector rhs = Vector::Zero(d);
  for (const auto& l : set.locals()) {
    h += l.gram() + l.ridge() * Matrix::Identity(d, d);
    rhs += l.moment();
  }
  h /= n;
  rhs /= n;

  Eigen::LDLT<Matrix> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    fail(ErrorKind::ill_posed, "normal equations are not positive definite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-13 * std::max(hi, 1.0))) fail(ErrorKind::ill_posed, "normal equations are singular");

  Optimum opt;
  opt.x_star = ldlt.solve(rhs);
  // One refinement step keeps the residual at rounding level for
  // moderately conditioned systems.
  Vector residual = rhs - h * opt.x_star;
  opt.x_star += ldlt.solve(residual);
  opt.hessian = h;
  opt.f_star = set.value(opt.x_star);
  opt.smoothness = set.smoothness();
  opt.local_grad_norms.reserve(static_cast<std::size_t>(set.n_agents()));
  for (int i = 0; i < set.n_agents(); ++i) {
    double g = set.exact_gradient(i, opt.x_star).norm();
    opt.local_grad_norms.push_back(g);
    opt.b_star = std::max(opt.b_star, g);
  }
  return opt;
}

ObjectiveSet generate_synthetic(const SyntheticSpec& spec, NoiseModel noise) {
  if (spec.n_agents <= 0 || spec.dim <= 0 || spec.samples_per_agent <= 0) {
    fail(ErrorKind::invalid_argument, "synthetic sizes must be positive");
  }
  if (!(spec.heterogeneity >= 0.0)) fail(ErrorKind::invalid_argument, "heterogeneity must be nonnegative");
  const int d = spec.dim;
  std::normal_distribution<double> normal(0.0, 1.0);

  Stream truth_rng = substream(spec.seed, 0, 0, StreamDomain::synthetic_data);
  Vector truth(d);
  for (int k = 0; k < d; ++k) truth(k) = normal(truth_rng);
  Vector col_scale(d);
  for (int k = 0; k < d; ++k) col_scale(k) = std::pow(static_cast<double>(k + 1), -spec.spectrum_decay);

  std::vector<LocalObjective> locals;
  locals.reserve(static_cast<std::size_t>(spec.n_agents));
  for (int i = 0; i < spec.n_agents; ++i) {
    Stream rng = substream(spec.seed, static_cast<std::uint64_t>(i) + 1, 0, StreamDomain::synthetic_data);
    Vector shift(d);
    for (int k = 0; k < d; ++k) shift(k) = normal(rng);
    Matrix x(spec.samples_per_agent, d);
    Vector y(spec.samples_per_agent);
    for (int r = 0; r < spec.samples_per_agent; ++r) {
      for (int k = 0; k < d; ++k) {
        x(r, k) = (normal(rng) + spec.heterogeneity * shift(k)) * col_scale(k);
      }
      y(r) = x.row(r).dot(truth) + spec.label_noise * normal(rng);
    }
    locals.emplace_back(std::move(x), std::move(y), spec.ridge);
  }
  return ObjectiveSet(std::move(locals), noise);
}

Dataset parse_libsvm(std::istream& in, std::int64_t max_rows, int dim_cap) {
  struct Row {
    double label;
    std::vector<std::pair<int, double>> entries;
  };
  std::vector<Row> rows;
  int max_index = 0;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (max_rows > 0 && static_cast<std::int64_t>(rows.size()) >= max_rows) break;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    Row row;
    char* end = nullptr;
    row.label = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      fail(ErrorKind::parse_error, fmt::format("line {}: bad label '{}'", line_no, token));
    }
    while (ls >> token) {
      auto colon = token.find(':');
      if (colon == std::string::npos) {
        fail(ErrorKind::parse_error, fmt::format("line {}: expected idx:val, got '{}'", line_no, token));
      }
      std::string idx_text = token.substr(0, colon);
      if (idx_text == "qid") continue;
      char* iend = nullptr;
      long idx = std::strtol(idx_text.c_str(), &iend, 10);
      if (iend == idx_text.c_str() || *iend != '\0') {
        fail(ErrorKind::parse_error, fmt::format("line {}: bad feature index '{}'", line_no, idx_text));
      }
      if (idx <= 0) fail(ErrorKind::parse_error, fmt::format("line {}: feature index {} must be >= 1", line_no, idx));
      std::string val_text = token.substr(colon + 1);
      char* vend = nullptr;
      double val = std::strtod(val_text.c_str(), &vend);
      if (vend == val_text.c_str() || *vend != '\0') {
        fail(ErrorKind::parse_error, fmt::format("line {}: bad feature value '{}'", line_no, val_text));
      }
      if (dim_cap > 0 && idx > dim_cap) continue;
      max_index = std::max(max_index, static_cast<int>(idx));
      row.entries.emplace_back(static_cast<int>(idx), val);
    }
    rows.push_back(std::move(row));
  }

  const int width = dim_cap > 0 ? dim_cap : max_index;
  Dataset data;
  data.features = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), width);
  data.labels = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
  bool binary = !rows.empty();
  for (const auto& r : rows) {
    if (r.label != -1.0 && r.label != 0.0 && r.label != 1.0) binary = false;
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto rk = static_cast<Eigen::Index>(k);
    double label = rows[k].label;
    data.labels(rk) = (binary && label == -1.0) ? 0.0 : label;
    for (auto [idx, val] : rows[k].entries) data.features(rk, idx - 1) = val;
  }
  return data;
}

Dataset load_libsvm(const std::string& path, std::int64_t max_rows, int dim_cap) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse_error, fmt::format("cannot open '{}'", path));
  return parse_libsvm(in, max_rows, dim_cap);
}

PartitionPolicy parse_partition_policy(const std::string& name) {
  if (name == "round_robin") return PartitionPolicy::round_robin;
  if (name == "contiguous") return PartitionPolicy::contiguous;
  fail(ErrorKind::invalid_argument, fmt::format("unknown partition policy '{}'", name));
}

const char* to_string(PartitionPolicy policy) noexcept {
  return policy == PartitionPolicy::round_robin ? "round_robin" : "contiguous";
}

std::vector<std::vector<int>> partition_rows(int rows, int n_agents, PartitionPolicy policy) {
  if (n_agents <= 0) fail(ErrorKind::invalid_argument, "agent count must be positive");
  if (rows < n_agents) {
    fail(ErrorKind::invalid_argument, fmt::format("{} rows cannot cover {} agents", rows, n_agents));
  }
  std::vector<std::vector<int>> parts(static_cast<std::size_t>(n_agents));
  if (policy == PartitionPolicy::round_robin) {
    for (int r = 0; r < rows; ++r) parts[static_cast<std::size_t>(r % n_agents)].push_back(r);
  } else {
    const int base = rows / n_agents;
    const int extra = rows % n_agents;
    int next = 0;
    for (int i = 0; i < n_agents; ++i) {
      int size = base + (i < extra ? 1 : 0);
      for (int k = 0; k < size; ++k) parts[static_cast<std::size_t>(i)].push_back(next++);
    }
  }
  return parts;
}

ObjectiveSet partition(const Dataset& data, int n_agents, PartitionPolicy policy, double ridge,
                       NoiseModel noise) {
  if (data.features.rows() != data.labels.size()) fail(ErrorKind::malformed_input, "features/labels size mismatch");
  auto parts = partition_rows(static_cast<int>(data.features.rows()), n_agents, policy);
  std::vector<LocalObjective> locals;
  locals.reserve(parts.size());
  for (const auto& idx : parts) {
    Matrix x(static_cast<Eigen::Index>(idx.size()), data.features.cols());
    Vector y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      x.row(static_cast<Eigen::Index>(k)) = data.features.row(idx[k]);
      y(static_cast<Eigen::Index>(k)) = data.labels(idx[k]);
    }
    locals.emplace_back(std::move(x), std::move(y), ridge);
  }
  return ObjectiveSet(std::move(locals), noise);
}

}  // namespace hclip
