// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "hclip/analysis.hpp"
#include "hclip/engine.hpp"

namespace hclip {

/// Fixed column order of the per-run CSV.
const std::vector<std::string>& run_csv_columns();

std::string run_csv(const RunRecord& record, const Problem& problem);
std::string run_sidecar(const RunRecord& record, double delta);

/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column; throws malformed-input when missing.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

std::map<std::string, std::string> parse_sidecar(const std::string& text);

/// Pointwise quantile curves of `metric` across records (any count >= 1).
/// Columns: t, then one column per quantile.
std::string quantile_csv(const std::vector<const RunRecord*>& records, const std::string& metric,
                         const std::vector<double>& quantiles);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title, bool log_y);

}  // namespace hclip
