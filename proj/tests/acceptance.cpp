// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gfla/channel.hpp"
#include "gfla/config.hpp"
#include "gfla/mac.hpp"
#include "gfla/neural.hpp"
#include "gfla/posg.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using gfla::ArchitectureKind;

namespace {

struct Verdict {
  bool passed = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    passed = passed && ok;
    notes.push_back((ok ? "ok: " : "FAILED: ") + what);
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void absorb(Verdict& v, const std::vector<gfla::oracle::Check>& checks) {
  for (const auto& c : checks) v.require(c.passed, c.name + " (" + c.detail + ")");
}

const gfla::AggregateSeries& series_of(const gfla::RunRecord& run, ArchitectureKind k) {
  for (const auto& s : run.campaign.series)
    if (s.kind == k) return s;
  throw std::runtime_error("architecture missing from campaign: " + gfla::to_string(k));
}

gfla::RealizationConfig desk_config() {
  gfla::RealizationConfig c;
  c.num_devices = 64;
  c.num_base_stations = 2;
  c.num_subcarriers = 8;
  c.num_preambles = 16;
  c.realizations = 8;
  c.ttis = 3000;
  c.seed = 1;
  c.architectures = {ArchitectureKind::kBaseline, ArchitectureKind::kIndependent,
                     ArchitectureKind::kCentralCritic, ArchitectureKind::kCentralizedLearning};
  return c;
}

gfla::RunRecord campaign(const gfla::RealizationConfig& cfg, const fs::path& out) {
  gfla::CampaignOptions opts;
  opts.progress = true;
  auto record = gfla::make_run_record(cfg, gfla::run_campaign(cfg, opts));
  gfla::emit_results(record, out);
  return record;
}

// Lazily computed campaigns shared between criteria.
class Campaigns {
 public:
  explicit Campaigns(fs::path out) : out_(std::move(out)) {}

  const gfla::RunRecord& desk() {
    if (!desk_) desk_ = std::make_unique<gfla::RunRecord>(campaign(desk_config(), out_ / "desk"));
    return *desk_;
  }
  const gfla::RunRecord& dense() {
    if (!dense_) {
      auto c = desk_config();
      c.num_devices = 192;
      c.architectures = {ArchitectureKind::kIndependent, ArchitectureKind::kCentralCritic,
                         ArchitectureKind::kCentralizedLearning};
      dense_ = std::make_unique<gfla::RunRecord>(campaign(c, out_ / "dense"));
    }
    return *dense_;
  }
  const fs::path& out() const { return out_; }

 private:
  fs::path out_;
  std::unique_ptr<gfla::RunRecord> desk_, dense_;
};

Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const double m = gfla::mu(0.99);
  v.require(m == 99.0, "mu(0.99) = " + fmt(m) + ", want exactly 99");
  const double kappa = gfla::correlation_coefficient(10.0, 0.01);
  v.require(std::fabs(kappa - 0.90375) <= 1e-4, "kappa = " + fmt(kappa) + ", want 0.90375 +- 1e-4");
  const double x = 2.0 * M_PI * 10.0 * 0.01;
  const double series = gfla::oracle::series_j0(x);
  v.require(std::fabs(kappa - series) <= 1e-9, "kappa vs series J0 " + fmt(series));
  const double pl = gfla::packet_loss_prob(0.001, 800);
  v.require(std::fabs(pl - 0.5507) <= 1e-4,
            "packet_loss(0.001, 800) = " + fmt(pl) + ", want 0.5507 +- 1e-4");
  for (const auto& c : gfla::oracle::formula_checks())
    if (c.name.rfind("cw_", 0) == 0 || c.name.rfind("packets(", 0) == 0)
      v.require(c.passed, c.name + " (" + c.detail + ")");
  const double secs = seconds_since(t0);
  v.require(secs < 1.0, "runtime " + fmt(secs) + " s < 1 s");
  return v;
}

Verdict criterion2() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  absorb(v, gfla::oracle::fading_checks(100000));
  const double secs = seconds_since(t0);
  v.require(secs < 5.0, "runtime " + fmt(secs) + " s < 5 s");
  return v;
}

Verdict criterion3() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  absorb(v, gfla::oracle::gradient_checks(10));
  const double secs = seconds_since(t0);
  v.require(secs < 30.0, "runtime " + fmt(secs) + " s < 30 s");
  return v;
}

Verdict criterion4() {
  Verdict v;
  absorb(v, gfla::oracle::ppo_checks());
  return v;
}

Verdict criterion5(Campaigns& c) {
  Verdict v;
  for (const auto& s : c.desk().campaign.series) {
    v.require(s.conservation_violations == 0,
              gfla::to_string(s.kind) + ": " + std::to_string(s.conservation_violations) +
                  " conservation or bound violations");
    v.require(s.realizations == 8, gfla::to_string(s.kind) + ": 8 realizations completed");
  }
  return v;
}

Verdict criterion6(Campaigns& c) {
  Verdict v;
  absorb(v, gfla::oracle::overhead_checks());
  const auto& run = c.desk();
  const double seconds = run.config.ttis * run.config.tti_s;
  for (std::size_t i = 0; i < run.overheads.size(); ++i) {
    const auto& o = run.overheads[i];
    const auto& s = run.campaign.series[i];
    const double ul = s.uplink_bits_per_device / seconds;
    const double dl = s.downlink_bits_per_device / seconds;
    const std::string name = gfla::to_string(o.kind);
    v.require(std::fabs(ul - o.report.uplink_bps) < 1e-9 &&
                  std::fabs(dl - o.report.downlink_bps) < 1e-9,
              name + " measured " + fmt(ul) + "/" + fmt(dl) + " bit/s vs report " +
                  fmt(o.report.uplink_bps) + "/" + fmt(o.report.downlink_bps));
    if (o.kind == ArchitectureKind::kCentralCritic)
      v.require(o.report.uplink_bps == 1600.0 && o.report.downlink_bps == 1600.0,
                "DACC 1600/1600 bit/s");
    if (o.kind == ArchitectureKind::kIndependent)
      v.require(o.report.uplink_bps == 0.0 && o.report.downlink_bps == 0.0, "IL 0/0");
    if (o.kind == ArchitectureKind::kCentralizedLearning) {
      const long w = run.weights_bias_everywhere.total();
      v.require(o.weight_count == w && o.report.downlink_bps == 16.0 * w / 2.0,
                "CLDI downlink 16 W / 2 = " + fmt(o.report.downlink_bps) + " bit/s with W=" +
                    std::to_string(w) + "; reported figure " +
                    fmt(gfla::kReportedCldiDownlinkBps) + " bit/s");
    }
  }
  return v;
}

Verdict criterion7(Campaigns& c) {
  Verdict v;
  const auto& run = c.desk();
  const auto& base = series_of(run, ArchitectureKind::kBaseline);
  const double bp = base.power_mw_mean.back(), bc = base.collisions_cum_mean.back();
  v.notes.push_back("baseline power " + fmt(bp) + " mW, collisions " + fmt(bc));
  for (auto k : {ArchitectureKind::kIndependent, ArchitectureKind::kCentralCritic,
                 ArchitectureKind::kCentralizedLearning}) {
    const auto& s = series_of(run, k);
    const double p = s.power_mw_mean.back(), col = s.collisions_cum_mean.back();
    v.require(p <= 0.85 * bp, gfla::to_string(k) + " power " + fmt(p) + " mW <= 0.85 x baseline (" +
                                  fmt(p / bp) + ")");
    v.require(col <= 0.5 * bc, gfla::to_string(k) + " collisions " + fmt(col) +
                                   " <= 0.5 x baseline (" + fmt(col / bc) + ")");
  }
  v.notes.push_back("campaign wall time " + fmt(run.campaign.wall_seconds) + " s");
  return v;
}

Verdict criterion8(Campaigns& c) {
  Verdict v;
  const auto& run = c.dense();
  const auto& il = series_of(run, ArchitectureKind::kIndependent);
  const auto& dacc = series_of(run, ArchitectureKind::kCentralCritic);
  const auto& cldi = series_of(run, ArchitectureKind::kCentralizedLearning);
  const double h = cldi.holding_mean.back();
  const double hmin = std::min(il.holding_mean.back(), dacc.holding_mean.back());
  v.require(h <= 1.1 * hmin, "CLDI holding " + fmt(h) + " <= 1.1 x min(IL, DACC) = " +
                                 fmt(1.1 * hmin));
  const double p = cldi.power_mw_mean.back();
  v.require(p <= il.power_mw_mean.back(),
            "CLDI power " + fmt(p) + " mW <= IL " + fmt(il.power_mw_mean.back()));
  v.require(p <= dacc.power_mw_mean.back(),
            "CLDI power " + fmt(p) + " mW <= DACC " + fmt(dacc.power_mw_mean.back()));
  v.notes.push_back("campaign wall time " + fmt(run.campaign.wall_seconds) + " s");
  return v;
}

Verdict criterion9(Campaigns& c) {
  Verdict v;
  const std::string first = gfla::metrics_csv(c.desk());
  const auto again = campaign(desk_config(), c.out() / "desk_repeat");
  const std::string second = gfla::metrics_csv(again);
  v.require(first == second, "metrics.csv identical across repeated campaigns (" +
                                 std::to_string(first.size()) + " bytes)");
  return v;
}

Verdict criterion10(Campaigns& c) {
  Verdict v;
  auto cfg = desk_config();
  cfg.architectures = {ArchitectureKind::kBaseline};
  cfg.learning_enabled = false;
  const auto run = campaign(cfg, c.out() / "baseline_only");
  const auto& s = run.campaign.series.front();
  const auto& h = s.holding_mean;
  bool finite = true;
  for (double x : h) finite = finite && std::isfinite(x) && x <= cfg.buffer_capacity;
  v.require(finite, "cumulative holding finite and within the buffer capacity");
  // Per-TTI holding averaged over windows, recovered from the cumulative mean.
  auto window = [&](std::size_t a, std::size_t b) {
    const double hi = h[b - 1] * static_cast<double>(b);
    const double lo = a == 0 ? 0.0 : h[a - 1] * static_cast<double>(a);
    return (hi - lo) / static_cast<double>(b - a);
  };
  const std::size_t n = h.size();
  const double middle = window(n / 3, 2 * n / 3), last = window(2 * n / 3, n);
  v.require(last <= 1.1 * middle, "final-third holding " + fmt(last) +
                                      " <= 1.1 x middle-third " + fmt(middle) +
                                      " (no queue growth)");
  v.notes.push_back("final cumulative holding " + fmt(h.back()) + " packets");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gfla acceptance suite"};
  std::string out = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--out", out, "directory for campaign result files");
  app.add_option("--criteria", only, "run only these criteria (1-10)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  Campaigns campaigns{fs::path(out)};
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"formula oracles", criterion1},
      {"fading statistics", criterion2},
      {"gradient correctness", criterion3},
      {"PPO semantics", criterion4},
      {"buffer conservation", [&] { return criterion5(campaigns); }},
      {"overhead accounting", [&] { return criterion6(campaigns); }},
      {"desk-scale trend", [&] { return criterion7(campaigns); }},
      {"density scaling", [&] { return criterion8(campaigns); }},
      {"determinism", [&] { return criterion9(campaigns); }},
      {"baseline sanity", [&] { return criterion10(campaigns); }},
  };
  const std::set<int> selected(only.begin(), only.end());

  std::vector<std::string> lines;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("error: ") + e.what());
    }
    for (const auto& note : v.notes) std::cout << "  [" << id << "] " << note << "\n";
    const std::string line = std::string(v.passed ? "PASS" : "FAIL") + "  criterion " +
                             std::to_string(id) + ": " + criteria[i].first;
    std::cout << line << std::endl;
    lines.push_back(line);
    failed += !v.passed;
  }
  std::cout << "\n";
  for (const auto& l : lines) std::cout << l << "\n";
  std::cout << failed << " of " << lines.size() << " criteria failed\n";
  return failed == 0 ? 0 : 1;
}
