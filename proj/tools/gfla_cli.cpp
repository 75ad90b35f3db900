// gfla: run campaigns, check the numerical oracles, count network weights.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gfla/config.hpp"
#include "gfla/errors.hpp"
#include "oracles.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& arch, int realizations,
                int ttis, long long seed, const std::string& out_dir, bool quiet) {
  gfla::RealizationConfig cfg =
      config_path.empty() ? gfla::RealizationConfig{} : gfla::parse_config(config_path);
  // Command-line values override the file.
  std::string overrides;
  if (!arch.empty()) overrides += "arch=" + arch + "\n";
  if (realizations > 0) overrides += "realizations=" + std::to_string(realizations) + "\n";
  if (ttis > 0) overrides += "ttis=" + std::to_string(ttis) + "\n";
  if (seed >= 0) overrides += "seed=" + std::to_string(seed) + "\n";
  if (!overrides.empty()) {
    std::string merged;
    std::istringstream base(gfla::config_to_text(cfg));
    std::string line;
    while (std::getline(base, line)) {
      const std::string key = line.substr(0, line.find(' '));
      if (overrides.find(key + "=") == 0 || overrides.find("\n" + key + "=") != std::string::npos)
        continue;
      merged += line + "\n";
    }
    cfg = gfla::parse_config_text(merged + overrides);
  }

  gfla::CampaignOptions opts;
  opts.progress = !quiet;
  std::clog << "[gfla] users=" << cfg.num_devices << " ttis=" << cfg.ttis
            << " realizations=" << cfg.realizations << " workers=" << gfla::default_workers()
            << "\n";
  auto campaign = gfla::run_campaign(cfg, opts);
  const auto record = gfla::make_run_record(cfg, std::move(campaign));
  gfla::emit_results(record, out_dir);

  std::printf("%-9s %10s %10s %12s %10s %9s\n", "arch", "UL bit/s", "DL bit/s", "collisions",
              "power mW", "holding");
  for (std::size_t i = 0; i < record.campaign.series.size(); ++i) {
    const auto& s = record.campaign.series[i];
    const auto& o = record.overheads[i];
    if (s.realizations == 0) {
      std::printf("%-9s (all realizations failed)\n", gfla::to_string(s.kind).c_str());
      continue;
    }
    std::printf("%-9s %10.0f %10.0f %12.1f %10.2f %9.3f\n", gfla::to_string(s.kind).c_str(),
                o.report.uplink_bps, o.report.downlink_bps, s.collisions_cum_mean.back(),
                s.power_mw_mean.back(), s.holding_mean.back());
    if (s.kind == gfla::ArchitectureKind::kCentralizedLearning)
      std::printf("          CLDI downlink with %ld weights; reported figure %.0f bit/s\n",
                  o.weight_count, gfla::kReportedCldiDownlinkBps);
  }
  for (const auto& f : record.campaign.failures)
    std::fprintf(stderr, "failed: arch=%s seed=%llu: %s\n", gfla::to_string(f.kind).c_str(),
                 static_cast<unsigned long long>(f.seed), f.message.c_str());
  std::printf("results written to %s (%.1f s)\n", out_dir.c_str(), record.campaign.wall_seconds);
  return record.campaign.failures.empty() ? 0 : 3;
}

int verify_command() {
  int failed = 0;
  for (const auto& c : gfla::oracle::full_suite()) {
    std::printf("%s  %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.detail.empty() ? "" : ": ", c.detail.c_str());
    failed += !c.passed;
  }
  std::printf("%d check(s) failed\n", failed);
  return failed ? 1 : 0;
}

int weights_command(const std::vector<int>& dims, int hidden) {
  if (dims.size() != 4) throw CLI::ValidationError("--dims", "expects NB,NS,M,P");
  for (auto conv : {gfla::WeightConvention::kBiasEverywhere, gfla::WeightConvention::kWeightsOnly}) {
    const auto w = gfla::count_weights(dims[0], dims[1], dims[2], dims[3], conv, hidden);
    std::printf("%-16s gru=%ld fc=%ld actor=%ld critic=%ld total=%ld bytes=%ld\n",
                conv == gfla::WeightConvention::kBiasEverywhere ? "bias_everywhere"
                                                                : "weights_only",
                w.gru, w.fully_connected, w.actor_head, w.critic_head, w.total(),
                2 * w.total());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grant-free uplink link adaptation simulator"};
  app.require_subcommand(1);

  std::string config_path, arch, out_dir;
  int realizations = 0, ttis = 0;
  long long seed = -1;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a campaign and write metrics.csv, summary.csv, run.json");
  run->add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
  run->add_option("--arch", arch, "il, dacc, cldi, baseline or all")
      ->check(CLI::IsMember({"il", "dacc", "cldi", "baseline", "all"}, CLI::ignore_case));
  run->add_option("--realizations", realizations, "number of realizations")->check(CLI::PositiveNumber);
  run->add_option("--ttis", ttis, "TTIs per realization")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "master seed")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--quiet", quiet, "no per-realization progress lines");

  auto* verify = app.add_subcommand("verify", "Run the numerical oracle suite");

  std::vector<int> dims;
  int hidden = 32;
  auto* weights = app.add_subcommand("weights", "Count network weights under both conventions");
  weights->add_option("--dims", dims, "NB,NS,M,P")->delimiter(',')->required()->expected(4);
  weights->add_option("--hidden", hidden, "recurrent/fully connected width")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_command(config_path, arch, realizations, ttis, seed, out_dir, quiet);
    if (*verify) return verify_command();
    if (*weights) return weights_command(dims, hidden);
  } catch (const gfla::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
