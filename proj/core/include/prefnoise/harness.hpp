#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "prefnoise/config.hpp"
#include "prefnoise/remote_teacher.hpp"

namespace prefnoise {

struct ExperimentRecord {
  std::uint64_t seed = 0;
  int round = 0;
  std::string noise_kind;
  double target_rate = 0.0;
  double realized_rate = 0.0;
  double denoiser_precision = 1.0;
  double denoiser_recall = 1.0;
  double reward_label_accuracy = 0.0;
  double mean_return = 0.0;
  double std_return = 0.0;

  bool operator==(const ExperimentRecord&) const = default;
};

inline constexpr const char* kRecordHeader =
    "seed,round,noise_kind,target_rate,realized_rate,denoiser_precision,denoiser_recall,"
    "reward_label_accuracy,mean_return,std_return";

/// One CSV row, reals printed with six decimals.
std::string format_record(const ExperimentRecord& record);

struct RunOptions {
  std::size_t jobs = 1;            // seeds run in parallel
  Transport* transport = nullptr;  // remote teacher transport; HttpTransport when null
  bool write_csv = true;
};

/// Runs every configured seed for `rounds` rounds. Rows are appended to
/// cfg.output_path as seeds finish, in seed order. Throws NumericError on a non-finite
/// metric and std::runtime_error (mentioning the rows already written) on I/O failure.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg,
                                             const RunOptions& options = {});

/// Records for a single seed; the unit of parallelism and determinism.
std::vector<ExperimentRecord> run_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                       Transport* transport = nullptr);

struct AggregateRow {
  std::string noise_kind;
  double target_rate = 0.0;
  std::size_t seeds = 0;
  double mean_final_return = 0.0;
  double std_final_return = 0.0;
  double mean_realized_rate = 0.0;
  double mean_label_accuracy = 0.0;
  double mean_denoiser_precision = 0.0;
  double mean_denoiser_recall = 0.0;
};

inline constexpr const char* kAggregateHeader =
    "noise_kind,target_rate,seeds,mean_final_return,std_final_return,mean_realized_rate,"
    "mean_label_accuracy,mean_denoiser_precision,mean_denoiser_recall";

std::string format_aggregate(const AggregateRow& row);

/// One row per (noise_kind, target_rate) cell in first-seen order, summarizing each
/// seed's final round (mean, sample std over seeds).
std::vector<AggregateRow> aggregate(std::span<const ExperimentRecord> records);

struct SweepResult {
  std::vector<ExperimentRecord> runs;
  std::vector<AggregateRow> cells;
};

/// Every kind at every rate, all seeds. Run rows go to base.output_path, aggregate rows to
/// aggregate_path(base.output_path). Throws ConfigError when kinds or rates are empty.
SweepResult sweep(const ExperimentConfig& base, std::span<const NoiseModelSpec> kinds,
                  std::span<const double> rates, const RunOptions& options = {});

/// results.csv -> results.aggregate.csv
std::string aggregate_path(const std::string& output_path);

}  // namespace prefnoise
