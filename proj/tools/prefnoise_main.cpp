#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefnoise/config.hpp"
#include "prefnoise/errors.hpp"
#include "prefnoise/harness.hpp"
#include "prefnoise/report.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t jobs = 1;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Run a single seed instead of the configured list");
  cmd->add_option("--out", o.out, "Output CSV path");
  cmd->add_option("--jobs", o.jobs, "Seeds to run in parallel")->check(CLI::PositiveNumber);
}

prefnoise::ParsedConfig load(const std::string& path, const Overrides& o) {
  auto parsed = prefnoise::load_config(path);
  if (o.seed) parsed.base.protocol.seeds = {*o.seed};
  if (o.out) parsed.base.output_path = *o.out;
  parsed.base.validate();
  return parsed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-label noise experiments for reward learning"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_opts;
  auto* run = app.add_subcommand("run", "Run one experiment configuration");
  run->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  add_overrides(run, run_opts);

  std::string sweep_config;
  std::vector<double> rates;
  bool suite = false;
  Overrides sweep_opts;
  auto* sw = app.add_subcommand("sweep", "Run every noise kind at every rate");
  sw->add_option("--config", sweep_config, "JSON config file")->required()->check(CLI::ExistingFile);
  sw->add_option("--rates", rates, "Comma-separated noise rates")->delimiter(',');
  sw->add_flag("--suite", suite, "Use the standard nine-configuration noise suite");
  add_overrides(sw, sweep_opts);

  std::string csv_path;
  auto* rep = app.add_subcommand("report", "Summarize a results CSV and write curve files");
  rep->add_option("csv", csv_path, "Run CSV")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto parsed = load(config_path, run_opts);
      prefnoise::RunOptions options;
      options.jobs = run_opts.jobs;
      const auto records = prefnoise::run_experiment(parsed.base, options);
      std::printf("wrote %zu rows to %s\n", records.size(), parsed.base.output_path.c_str());
    } else if (*sw) {
      const auto parsed = load(sweep_config, sweep_opts);
      auto kinds = parsed.noise_kinds;
      if (suite || !parsed.noise_given) {
        kinds = prefnoise::standard_noise_suite(
            0.0, prefnoise::default_magnitude_subset(parsed.base.env.kind));
      }
      if (rates.empty()) rates = parsed.base.protocol.sweep_rates;
      prefnoise::RunOptions options;
      options.jobs = sweep_opts.jobs;
      const auto result = prefnoise::sweep(parsed.base, kinds, rates, options);
      std::printf("wrote %zu rows to %s and %zu cells to %s\n", result.runs.size(),
                  parsed.base.output_path.c_str(), result.cells.size(),
                  prefnoise::aggregate_path(parsed.base.output_path).c_str());
    } else if (*rep) {
      const auto records = prefnoise::read_records(csv_path);
      const auto report = prefnoise::build_report(records);
      std::cout << prefnoise::format_summary_table(report);
      const auto files = prefnoise::write_report(report, csv_path);
      std::printf("summary: %s\ncurves: %zu files\n", files.summary_path.c_str(),
                  files.curve_paths.size());
    }
  } catch (const prefnoise::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const prefnoise::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
