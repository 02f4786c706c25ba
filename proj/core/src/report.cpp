#include "prefnoise/report.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "prefnoise/errors.hpp"
#include "prefnoise/math.hpp"

namespace prefnoise {

namespace {

constexpr std::array<const char*, 10> kColumns = {
    "seed",          "round",         "noise_kind",         "target_rate",           "realized_rate",
    "denoiser_precision", "denoiser_recall", "reward_label_accuracy", "mean_return", "std_return"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string row_context(const std::string& source, std::size_t line_no) {
  return source + ": row " + std::to_string(line_no);
}

double parse_real(const std::string& text, const std::string& column, const std::string& where,
                  const std::string& line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw ParseError(where + ": column '" + column + "': bad number '" + text + "'", line);
  }
  return v;
}

long long parse_integer(const std::string& text, const std::string& column,
                        const std::string& where, const std::string& line) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || v < 0) {
    throw ParseError(where + ": column '" + column + "': bad integer '" + text + "'", line);
  }
  return v;
}

std::string rate_tag(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate);
  return buf;
}

std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

}  // namespace

std::vector<ExperimentRecord> parse_records(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file", "");
  const auto header = split_csv_line(strip_cr(line));
  std::array<std::size_t, kColumns.size()> index{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) {
      throw ParseError(source + ": missing column '" + kColumns[c] + "'", line);
    }
    index[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<ExperimentRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto where = row_context(source, line_no);
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line);
    }
    auto field = [&](std::size_t c) -> const std::string& { return fields[index[c]]; };
    ExperimentRecord r;
    r.seed = static_cast<std::uint64_t>(parse_integer(field(0), kColumns[0], where, line));
    r.round = static_cast<int>(parse_integer(field(1), kColumns[1], where, line));
    r.noise_kind = field(2);
    if (r.noise_kind.empty()) {
      throw ParseError(where + ": column 'noise_kind' is empty", line);
    }
    double* reals[] = {&r.target_rate,           &r.realized_rate, &r.denoiser_precision,
                       &r.denoiser_recall,       &r.reward_label_accuracy,
                       &r.mean_return,           &r.std_return};
    for (std::size_t c = 3; c < kColumns.size(); ++c) {
      *reals[c - 3] = parse_real(field(c), kColumns[c], where, line);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ExperimentRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_records(in, path);
}

Report build_report(std::span<const ExperimentRecord> records) {
  using CellKey = std::pair<std::string, double>;
  std::vector<CellKey> order;
  std::map<CellKey, std::map<int, std::vector<const ExperimentRecord*>>> by_round;
  std::map<CellKey, std::map<std::uint64_t, const ExperimentRecord*>> final_by_seed;
  for (const auto& r : records) {
    const CellKey key{r.noise_kind, r.target_rate};
    if (!by_round.count(key)) order.push_back(key);
    by_round[key][r.round].push_back(&r);
    auto& slot = final_by_seed[key][r.seed];
    if (slot == nullptr || r.round > slot->round) slot = &r;
  }

  Report report;
  for (const auto& key : order) {
    SummaryRow row;
    row.noise_kind = key.first;
    row.target_rate = key.second;
    std::vector<double> returns;
    for (const auto& [seed, r] : final_by_seed[key]) {
      returns.push_back(r->mean_return);
      row.mean_label_accuracy += r->reward_label_accuracy;
      row.mean_realized_rate += r->realized_rate;
    }
    const MeanStd ms = mean_std(returns);
    row.seeds = ms.n;
    row.mean_return = ms.mean;
    row.std_return = ms.std;
    row.stderr_return = ms.std / std::sqrt(static_cast<double>(ms.n));
    row.mean_label_accuracy /= static_cast<double>(ms.n);
    row.mean_realized_rate /= static_cast<double>(ms.n);
    row.single_seed = ms.n == 1;
    report.summary.push_back(row);

    Curve curve{key.first, key.second, {}};
    for (const auto& [round, rs] : by_round[key]) {
      std::vector<double> values;
      for (const auto* r : rs) values.push_back(r->mean_return);
      const MeanStd m = mean_std(values);
      curve.points.push_back({round, m.mean, m.std / std::sqrt(static_cast<double>(m.n)), m.n});
    }
    report.curves.push_back(std::move(curve));
  }
  return report;
}

std::string format_summary_table(const Report& report) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %6s %5s %12s %12s %12s %9s %9s\n", "noise_kind", "rate",
                "seeds", "mean_return", "std", "stderr", "accuracy", "realized");
  out += buf;
  for (const auto& r : report.summary) {
    std::snprintf(buf, sizeof buf, "%-28s %6.2f %5zu %12.4f %12.4f %12.4f %9.4f %9.4f%s\n",
                  r.noise_kind.c_str(), r.target_rate, r.seeds, r.mean_return, r.std_return,
                  r.stderr_return, r.mean_label_accuracy, r.mean_realized_rate,
                  r.single_seed ? "  (single seed: std is 0)" : "");
    out += buf;
  }
  return out;
}

ReportFiles write_report(const Report& report, const std::string& csv_path) {
  const std::string stem = stem_of(csv_path);
  ReportFiles files;
  files.summary_path = stem + ".summary.csv";
  {
    std::ofstream out(files.summary_path);
    out << "noise_kind,target_rate,seeds,mean_return,std_return,stderr_return,"
           "mean_label_accuracy,mean_realized_rate,single_seed\n";
    char buf[512];
    for (const auto& r : report.summary) {
      std::snprintf(buf, sizeof buf, "%s,%.6f,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n",
                    r.noise_kind.c_str(), r.target_rate, r.seeds, r.mean_return, r.std_return,
                    r.stderr_return, r.mean_label_accuracy, r.mean_realized_rate,
                    r.single_seed ? 1 : 0);
      out << buf;
    }
    if (!out) throw std::runtime_error("cannot write " + files.summary_path);
  }
  for (const auto& curve : report.curves) {
    const std::string path =
        stem + ".curve." + curve.noise_kind + "." + rate_tag(curve.target_rate) + ".csv";
    std::ofstream out(path);
    out << "round,mean,stderr\n";
    char buf[128];
    for (const auto& p : curve.points) {
      std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", p.round, p.mean, p.stderr_);
      out << buf;
    }
    if (!out) throw std::runtime_error("cannot write " + path);
    files.curve_paths.push_back(path);
  }
  return files;
}

}  // namespace prefnoise
