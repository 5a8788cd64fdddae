// SPDX-License-Identifier: Apache-2.0
#include "hclip/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "hclip/errors.hpp"

namespace hclip {

const char* to_string(NoiseKind kind) noexcept {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::student_t: return "student_t";
    case NoiseKind::pareto: return "pareto";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "student_t") return NoiseKind::student_t;
  if (name == "pareto") return NoiseKind::pareto;
  fail(ErrorKind::invalid_argument, fmt::format("unknown noise kind '{}'", name));
}

NoiseModel NoiseModel::none() { return NoiseModel{}; }

NoiseModel NoiseModel::gaussian(double std_dev, double scale, double p, double sigma) {
  NoiseModel m{NoiseKind::gaussian, std_dev, 1.0, scale, p, sigma};
  m.validate();
  return m;
}

NoiseModel NoiseModel::student_t(double dof, double scale, double p, double sigma) {
  NoiseModel m{NoiseKind::student_t, dof, 1.0, scale, p, sigma};
  m.validate();
  return m;
}

NoiseModel NoiseModel::pareto(double tail_index, double x_min, double scale, double p, double sigma) {
  NoiseModel m{NoiseKind::pareto, tail_index, x_min, scale, p, sigma};
  m.validate();
  return m;
}

void NoiseModel::validate() const {
  if (kind == NoiseKind::none) return;
  if (!(p > 1.0 && p <= 2.0)) fail(ErrorKind::invalid_argument, fmt::format("moment order p = {} not in (1, 2]", p));
  if (!(sigma > 0.0)) fail(ErrorKind::invalid_argument, "sigma must be positive");
  if (!(scale > 0.0)) fail(ErrorKind::invalid_argument, "noise scale must be positive");
  switch (kind) {
    case NoiseKind::gaussian:
      if (!(shape > 0.0)) fail(ErrorKind::invalid_argument, "gaussian std must be positive");
      break;
    case NoiseKind::student_t:
      if (!(shape > 1.0)) fail(ErrorKind::invalid_argument, "student_t needs dof > 1 to be zero-mean");
      if (!(p < shape)) {
        fail(ErrorKind::invalid_argument,
             fmt::format("student_t({}) has no finite moment of order p = {}", shape, p));
      }
      break;
    case NoiseKind::pareto:
      if (!(shape > 1.0)) fail(ErrorKind::invalid_argument, "pareto tail index must exceed 1");
      if (!(pareto_scale > 0.0)) fail(ErrorKind::invalid_argument, "pareto x_min must be positive");
      if (!(p < shape)) {
        fail(ErrorKind::invalid_argument,
             fmt::format("pareto({}) has no finite moment of order p = {}", shape, p));
      }
      break;
    case NoiseKind::none: break;
  }
}

double student_t_abs_moment(double nu, double p) {
  if (!(p > -1.0 && p < nu)) {
    fail(ErrorKind::invalid_argument, fmt::format("E|T|^{} is infinite for nu = {}", p, nu));
  }
  return std::pow(nu, p / 2.0) * std::tgamma((p + 1.0) / 2.0) * std::tgamma((nu - p) / 2.0) /
         (std::sqrt(std::numbers::pi) * std::tgamma(nu / 2.0));
}

double gaussian_abs_moment(double std_dev, double p) {
  return std::pow(std_dev, p) * std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) /
         std::sqrt(std::numbers::pi);
}

std::optional<double> declared_sigma(NoiseKind kind, double shape, double scale, double p, int dim) {
  const double d = static_cast<double>(dim);
  switch (kind) {
    case NoiseKind::none: return 0.0;
    case NoiseKind::gaussian: {
      // ||xi|| = scale*std*chi_d
      double log_chi = (p / 2.0) * std::log(2.0) + std::lgamma((d + p) / 2.0) - std::lgamma(d / 2.0);
      return scale * shape * std::exp(log_chi / p);
    }
    case NoiseKind::student_t:
      return scale * std::pow(d * student_t_abs_moment(shape, p), 1.0 / p);
    case NoiseKind::pareto: return std::nullopt;
  }
  return std::nullopt;
}

void sample_into(const NoiseModel& model, std::span<double> out, Stream& rng) {
  switch (model.kind) {
    case NoiseKind::none:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case NoiseKind::gaussian: {
      std::normal_distribution<double> normal(0.0, model.shape);
      for (double& v : out) v = model.scale * normal(rng);
      return;
    }
    case NoiseKind::student_t: {
      // Normal over sqrt(chi^2/dof); the chi-square draws come from a
      // second stream derived from the first.
      Stream aux(rng() ^ 0x5851f42d4c957f2dULL);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::chi_squared_distribution<double> chi2(model.shape);
      for (double& v : out) {
        double z = normal(rng);
        double c = chi2(aux);
        v = model.scale * z / std::sqrt(c / model.shape);
      }
      return;
    }
    case NoiseKind::pareto: {
      const double a = model.shape;
      const double xm = model.pareto_scale;
      const double mean = a * xm / (a - 1.0);
      for (double& v : out) {
        double u = 1.0 - rng.uniform();  // (0, 1]
        v = model.scale * (xm * std::pow(u, -1.0 / a) - mean);
      }
      return;
    }
  }
}

Vector sample(const NoiseModel& model, int dim, Stream& rng) {
  if (dim <= 0) fail(ErrorKind::invalid_argument, "noise dimension must be positive");
  Vector v(dim);
  sample_into(model, std::span<double>(v.data(), static_cast<std::size_t>(dim)), rng);
  return v;
}

MomentEstimate estimate_p_moment(const NoiseModel& model, double p, int dim, std::int64_t n_samples,
                                 std::uint64_t seed, int bootstrap_resamples) {
  if (!(p > 0.0 && p <= 2.0)) fail(ErrorKind::invalid_argument, "moment order must lie in (0, 2]");
  if (n_samples < 1000) fail(ErrorKind::invalid_argument, "need at least 1000 samples");
  if (dim <= 0) fail(ErrorKind::invalid_argument, "noise dimension must be positive");
  if (bootstrap_resamples < 10) fail(ErrorKind::invalid_argument, "need at least 10 bootstrap resamples");

  std::vector<double> values(static_cast<std::size_t>(n_samples));
  Vector draw(dim);
  std::span<double> view(draw.data(), static_cast<std::size_t>(dim));
  for (std::int64_t k = 0; k < n_samples; ++k) {
    Stream rng = substream(seed, static_cast<std::uint64_t>(k), 0, StreamDomain::monte_carlo);
    sample_into(model, view, rng);
    values[static_cast<std::size_t>(k)] = std::pow(draw.norm(), p);
  }
  MomentEstimate est;
  est.n_samples = n_samples;
  double total = 0.0;
  for (double v : values) total += v;
  est.mean = total / static_cast<double>(n_samples);

  std::vector<double> means(static_cast<std::size_t>(bootstrap_resamples));
  for (int r = 0; r < bootstrap_resamples; ++r) {
    Stream rng = substream(seed, static_cast<std::uint64_t>(r), 0, StreamDomain::bootstrap);
    double s = 0.0;
    for (std::int64_t k = 0; k < n_samples; ++k) {
      s += values[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n_samples))];
    }
    means[static_cast<std::size_t>(r)] = s / static_cast<double>(n_samples);
  }
  std::sort(means.begin(), means.end());
  auto pick = [&](double q) {
    auto idx = static_cast<std::size_t>(std::floor(q * (bootstrap_resamples - 1) + 0.5));
    return means[idx];
  };
  est.lower = pick(0.025);
  est.upper = pick(0.975);
  return est;
}

}  // namespace hclip
