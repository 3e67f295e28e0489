#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace eerm {

struct ResultRecord {
  int seed = 0;
  /// -1 for records not tied to one environment (toy theta).
  int env_id = 0;
  std::string metric;
  double value = 0.0;
  std::string method;
  /// Seconds; reported in summary.json only so results.csv stays reproducible.
  double wall_time = 0.0;
};

/// (method, seed, env_id, metric) order.
void sort_records(std::vector<ResultRecord>& records);

/// Header "method,seed,env_id,metric,value", one row per record.
void write_results_csv(std::ostream& out, std::span<const ResultRecord> records);

struct SummaryCell {
  std::string method;
  int env_id = 0;
  std::string metric;
  double mean = 0.0;
  /// Sample standard deviation across seeds (0 for a single seed).
  double std = 0.0;
  int n = 0;
};

std::vector<SummaryCell> summarize(std::span<const ResultRecord> records);

/// Grouped bar chart with +-std whiskers: one group per environment, one bar
/// per method.
std::string bar_chart_svg(std::span<const SummaryCell> cells, const std::string& metric);

/// Writes results.csv, summary.json (cells plus `extra`) and plots/<metric>.svg.
void emit_outputs(std::span<const ResultRecord> records, const std::filesystem::path& out_dir,
                  const nlohmann::json& extra);

}  // namespace eerm
