#pragma once

// Flat key=value configuration files and result emission.

#include <filesystem>
#include <string>
#include <vector>

#include "gfla/architectures.hpp"
#include "gfla/neural.hpp"
#include "gfla/sim.hpp"

namespace gfla {

// One `key = value` per line; `#` starts a comment. Unknown keys, malformed
// lines and out-of-range values raise ConfigError with the line number.
RealizationConfig parse_config_text(const std::string& text);
RealizationConfig parse_config(const std::filesystem::path& path);

// Every key with its effective value, in a form parse_config_text accepts.
std::string config_to_text(const RealizationConfig& cfg);

// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

struct ArchitectureOverhead {
  ArchitectureKind kind;
  OverheadReport report;
  long weight_count = 0;        // parameters of the deployed network
  double measured_uplink_bps = 0.0;
  double measured_downlink_bps = 0.0;
};

struct RunRecord {
  RealizationConfig config;
  CampaignResult campaign;
  std::vector<ArchitectureOverhead> overheads;
  WeightCount weights_bias_everywhere;
  WeightCount weights_only;
};

RunRecord make_run_record(const RealizationConfig& cfg, CampaignResult campaign);

// metrics.csv column order, fixed.
inline constexpr const char* kMetricsHeader =
    "tti,arch,holding_mean,holding_std,overflow_mean,overflow_std,power_mw_mean,power_mw_std,"
    "collisions_cum_mean,collisions_cum_std";
inline constexpr const char* kSummaryHeader =
    "arch,realizations,ul_overhead_bps,dl_overhead_bps,collisions,power_mw,holding_packets,"
    "overflow_packets";

std::string metrics_csv(const RunRecord& run);
std::string summary_csv(const RunRecord& run);
std::string run_json(const RunRecord& run);

// Writes metrics.csv, summary.csv and run.json into out_dir (created when
// missing). Throws std::runtime_error when a file cannot be written.
void emit_results(const RunRecord& run, const std::filesystem::path& out_dir);

}  // namespace gfla
