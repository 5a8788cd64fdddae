// SPDX-License-Identifier: Apache-2.0
#include "hclip/record_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "hclip/errors.hpp"

namespace hclip {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

const std::vector<std::string>& run_csv_columns() {
  static const std::vector<std::string> columns = {
      "t",           "fbar_gap",    "run_avg_gap",        "consensus_max",     "z_t",
      "delta_t",     "theta_acc",   "diag_eta",           "diag_lambda",       "diag_clip_count",
      "diag_max_grad_norm", "diag_max_used_grad_norm", "diag_max_theta_norm", "diag_network_bound",
      "diag_gradient_bound_margin"};
  return columns;
}

std::string run_csv(const RunRecord& record, const Problem& problem) {
  const auto& cols = run_csv_columns();
  std::string out;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out += cols[c];
    out += c + 1 < cols.size() ? ',' : '\n';
  }
  const ContractionConstants cc = contraction_constants(problem.schedule.n_agents(), problem.schedule.weight_floor(),
                                                        problem.schedule.period());
  const double ng = static_cast<double>(record.n_agents) * cc.gamma;
  const double L = problem.optimum.smoothness;
  // Network bound for x_{i,t} needs lambda_l eta_l for every l < t, which the
  // params determine regardless of stride.
  double series = 0.0;
  double beta_pow = 1.0;
  std::int64_t next_l = 1;
  for (std::size_t r = 0; r < record.rows.size(); ++r) {
    const RunRow& row = record.rows[r];
    for (; next_l < row.t; ++next_l) {
      series = cc.beta * series + record.params.clip_threshold(next_l) * record.params.step_size(next_l);
      beta_pow *= cc.beta;
    }
    double max_grad = 0.0;
    double max_used = 0.0;
    double max_theta = 0.0;
    double eq6_margin = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < record.n_agents; ++i) {
      const double g = record.at(record.exact_grad_norm, r, i);
      max_grad = std::max(max_grad, g);
      max_used = std::max(max_used, record.at(record.used_grad_norm, r, i));
      max_theta = std::max(max_theta, record.at(record.theta_norm, r, i));
      const double bound = L * record.at(record.deviation, r, i) + L * row.delta +
                           problem.optimum.local_grad_norms[static_cast<std::size_t>(i)];
      eq6_margin = std::max(eq6_margin, g - bound);
    }
    const double network_bound = ng * beta_pow * record.r1 + ng * series;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", row.t, num(row.fbar_gap),
                       num(row.run_avg_gap), num(row.consensus_max), num(row.z), num(row.delta), num(row.theta_acc),
                       num(row.eta), num(row.lambda), row.clip_count, num(max_grad), num(max_used), num(max_theta),
                       num(network_bound), num(eq6_margin));
  }
  return out;
}

std::string run_sidecar(const RunRecord& record, double delta) {
  const DiagnosticTrace tr = diagnostics(record, delta);
  std::string s;
  auto kv = [&s](const char* k, const std::string& v) { s += fmt::format("{} = {}\n", k, v); };
  kv("mode", to_string(record.mode));
  kv("seed", std::to_string(record.seed));
  kv("n_agents", std::to_string(record.n_agents));
  kv("dim", std::to_string(record.dim));
  kv("stride", std::to_string(record.stride));
  kv("horizon", std::to_string(record.params.horizon));
  kv("kappa", num(record.params.kappa));
  kv("alpha", num(record.params.alpha));
  kv("m", num(record.params.m));
  kv("b1", num(record.params.b1));
  kv("lambda", num(record.params.lambda));
  kv("delta", num(record.params.delta));
  kv("r1", num(record.r1));
  kv("delta1", num(record.delta1));
  kv("theta_acc_max", num(tr.max_theta_acc));
  kv("theta_acc_threshold", num(tr.threshold_statement));
  kv("theta_acc_threshold_alt", num(tr.threshold_induction));
  kv("theta_acc_exceeded", tr.exceeded_statement ? "true" : "false");
  kv("cumulative_gap", num(tr.cumulative_gap));
  kv("cumulative_gap_bound", num(tr.cumulative_gap_bound));
  kv("condition_digest", record.condition_digest);
  kv("wall_seconds", fmt::format("{:.3f}", record.wall_seconds));
  return s;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::invalid_argument, fmt::format("cannot write '{}'", tmp.string()));
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::invalid_argument, fmt::format("short write to '{}'", tmp.string()));
  }
  fs::rename(tmp, target);
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorKind::malformed_input, fmt::format("CSV has no column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      fail(ErrorKind::malformed_input, fmt::format("CSV line {}: {} cells, header has {}", lineno, cells.size(),
                                                   table.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        fail(ErrorKind::malformed_input, fmt::format("CSV line {}: bad number '{}'", lineno, c));
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) fail(ErrorKind::malformed_input, "empty CSV");
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::malformed_input, fmt::format("cannot open '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::map<std::string, std::string> parse_sidecar(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

std::string quantile_csv(const std::vector<const RunRecord*>& records, const std::string& metric,
                         const std::vector<double>& quantiles) {
  if (records.empty()) fail(ErrorKind::invalid_argument, "no records to summarize");
  const MetricSelector sel = metric_selector(metric);
  const auto n_rows = records.front()->rows.size();
  for (const RunRecord* r : records) {
    if (r->rows.size() != n_rows) fail(ErrorKind::invalid_argument, "records differ in length");
  }
  std::string out = "t";
  for (double q : quantiles) out += fmt::format(",{}_q{:g}", metric, q);
  out += '\n';
  std::vector<double> column(records.size());
  for (std::size_t row = 0; row < n_rows; ++row) {
    for (std::size_t k = 0; k < records.size(); ++k) column[k] = sel(records[k]->rows[row]);
    out += std::to_string(records.front()->rows[row].t);
    for (double q : quantiles) out += "," + num(nearest_rank_quantile(column, q));
    out += '\n';
  }
  return out;
}

std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title, bool log_y) {
  constexpr double W = 720, H = 440, left = 70, right = 170, top = 40, bottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [log_y](double v) { return log_y ? std::log10(v) : v; };
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (log_y && !(s.y[k] > 0.0)) continue;
      if (!std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph; };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">{3}</text>\n"
      "<rect x=\"{2}\" y=\"{4}\" width=\"{5}\" height=\"{6}\" fill=\"none\" stroke=\"black\"/>\n",
      W, H, left, title, top, pw, ph);
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0;
    const double fy = y0 + (y1 - y0) * k / 4.0;
    const double label_y = log_y ? std::pow(10.0, fy) : fy;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                     "text-anchor=\"middle\">{:.4g}</text>\n",
                     left + pw * k / 4.0, H - bottom + 18, fx);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                     "text-anchor=\"end\">{:.3g}</text>\n",
                     left - 6, top + ph * (1.0 - k / 4.0) + 4, label_y);
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t j = 0; j < sr.x.size(); ++j) {
      if (!std::isfinite(sr.y[j]) || (log_y && !(sr.y[j] > 0.0))) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(sr.x[j]), py(sr.y[j]));
    }
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                     W - right + 10, top + 16.0 * static_cast<double>(k + 1), color, sr.label);
  }
  s += "</svg>\n";
  return s;
}

}  // namespace hclip
