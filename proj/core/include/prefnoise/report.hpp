#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "prefnoise/harness.hpp"

namespace prefnoise {

/// Final-round statistics over seeds for one (noise_kind, target_rate) cell.
struct SummaryRow {
  std::string noise_kind;
  double target_rate = 0.0;
  std::size_t seeds = 0;
  double mean_return = 0.0;
  double std_return = 0.0;     // sample std over seeds; 0 for a single seed
  double stderr_return = 0.0;  // std / sqrt(seeds)
  double mean_label_accuracy = 0.0;
  double mean_realized_rate = 0.0;
  bool single_seed = false;
};

struct CurvePoint {
  int round = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t seeds = 0;
};

struct Curve {
  std::string noise_kind;
  double target_rate = 0.0;
  std::vector<CurvePoint> points;  // mean_return per round
};

struct Report {
  std::vector<SummaryRow> summary;
  std::vector<Curve> curves;
};

/// Reads a run CSV. Columns are matched by header name; a missing column, a short row
/// or an unparseable value throws ParseError naming the column or row.
std::vector<ExperimentRecord> parse_records(std::istream& in, const std::string& source);
std::vector<ExperimentRecord> read_records(const std::string& path);

Report build_report(std::span<const ExperimentRecord> records);

std::string format_summary_table(const Report& report);

struct ReportFiles {
  std::string summary_path;
  std::vector<std::string> curve_paths;
};

/// results.csv -> results.summary.csv and results.curve.<kind>.<rate>.csv files with
/// columns round,mean,stderr.
ReportFiles write_report(const Report& report, const std::string& csv_path);

}  // namespace prefnoise
