#include "gfla/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gfla/errors.hpp"
#include "json.hpp"

namespace gfla {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("not a number: '" + v + "'");
  return out;
}

long long to_integer(const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError("not an integer: '" + v + "'");
  return out;
}

int to_int(const std::string& v) {
  const long long x = to_integer(v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError("integer out of range: '" + v + "'");
  return static_cast<int>(x);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("not a boolean: '" + v + "'");
}

std::vector<ArchitectureKind> to_architectures(const std::string& v) {
  std::string lower = v;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "all")
    return {ArchitectureKind::kBaseline, ArchitectureKind::kIndependent,
            ArchitectureKind::kCentralCritic, ArchitectureKind::kCentralizedLearning};
  std::vector<ArchitectureKind> out;
  try {
    for (const auto& s : split_list(v)) out.push_back(parse_architecture(s));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

struct Key {
  std::function<void(RealizationConfig&, const std::string&)> set;
  std::function<std::string(const RealizationConfig&)> get;
};

std::string num(double v) { return format_number(v); }
std::string integer(long long v) { return std::to_string(v); }

// Declaration order is the echo order.
const std::vector<std::pair<std::string, Key>>& keys() {
  using C = RealizationConfig;
  using S = const std::string&;
  static const std::vector<std::pair<std::string, Key>> k = {
      {"symbol_rate", {[](C& c, S v) { c.symbol_rate = to_double(v); },
                       [](const C& c) { return num(c.symbol_rate); }}},
      {"radius", {[](C& c, S v) { c.radius_m = to_double(v); },
                  [](const C& c) { return num(c.radius_m); }}},
      {"users", {[](C& c, S v) { c.num_devices = to_int(v); },
                 [](const C& c) { return integer(c.num_devices); }}},
      {"base_stations", {[](C& c, S v) { c.num_base_stations = to_int(v); },
                         [](const C& c) { return integer(c.num_base_stations); }}},
      {"subcarriers", {[](C& c, S v) { c.num_subcarriers = to_int(v); },
                       [](const C& c) { return integer(c.num_subcarriers); }}},
      {"preambles", {[](C& c, S v) { c.num_preambles = to_int(v); },
                     [](const C& c) { return integer(c.num_preambles); }}},
      {"path_loss_exponent", {[](C& c, S v) { c.path_loss_exponent = to_double(v); },
                              [](const C& c) { return num(c.path_loss_exponent); }}},
      {"buffer_capacity", {[](C& c, S v) { c.buffer_capacity = to_int(v); },
                           [](const C& c) { return integer(c.buffer_capacity); }}},
      {"update_period", {[](C& c, S v) { c.update_period = to_int(v); },
                         [](const C& c) { return integer(c.update_period); }}},
      {"packet_bytes", {[](C& c, S v) { c.packet_bytes = to_int(v); },
                        [](const C& c) { return integer(c.packet_bytes); }}},
      {"tti", {[](C& c, S v) { c.tti_s = to_double(v); },
               [](const C& c) { return num(c.tti_s); }}},
      {"delay_set", {[](C& c, S v) {
                       c.delay_set.clear();
                       for (const auto& s : split_list(v)) c.delay_set.push_back(to_int(s));
                     },
                     [](const C& c) {
                       return join<int>(c.delay_set, [](const int& x) { return integer(x); });
                     }}},
      {"arrival_rates", {[](C& c, S v) {
                           c.arrival_rate_set.clear();
                           for (const auto& s : split_list(v))
                             c.arrival_rate_set.push_back(to_double(s));
                         },
                         [](const C& c) {
                           return join<double>(c.arrival_rate_set,
                                               [](const double& x) { return num(x); });
                         }}},
      {"gamma", {[](C& c, S v) { c.gamma = to_double(v); },
                 [](const C& c) { return num(c.gamma); }}},
      {"p_on_mw", {[](C& c, S v) { c.p_on_mw = to_double(v); },
                   [](const C& c) { return num(c.p_on_mw); }}},
      {"p_off_mw", {[](C& c, S v) { c.p_off_mw = to_double(v); },
                    [](const C& c) { return num(c.p_off_mw); }}},
      {"max_doppler", {[](C& c, S v) { c.max_doppler_hz = to_double(v); },
                       [](const C& c) { return num(c.max_doppler_hz); }}},
      {"arch", {[](C& c, S v) { c.architectures = to_architectures(v); },
                [](const C& c) {
                  return join<ArchitectureKind>(
                      c.architectures, [](const ArchitectureKind& a) { return to_string(a); });
                }}},
      {"ttis", {[](C& c, S v) { c.ttis = to_int(v); },
                [](const C& c) { return integer(c.ttis); }}},
      {"realizations", {[](C& c, S v) { c.realizations = to_int(v); },
                        [](const C& c) { return integer(c.realizations); }}},
      {"seed", {[](C& c, S v) {
                  const long long s = to_integer(v);
                  if (s < 0) throw ConfigError("seed must be >= 0");
                  c.seed = static_cast<std::uint64_t>(s);
                },
                [](const C& c) { return std::to_string(c.seed); }}},
      {"max_modulation", {[](C& c, S v) { c.max_modulation = to_int(v); },
                          [](const C& c) { return integer(c.max_modulation); }}},
      {"cw_a", {[](C& c, S v) { c.cw_a = to_double(v); },
                [](const C& c) { return num(c.cw_a); }}},
      {"slot_quantum", {[](C& c, S v) { c.slot_quantum = to_double(v); },
                        [](const C& c) { return num(c.slot_quantum); }}},
      {"power_set_mw", {[](C& c, S v) {
                          c.power_set_mw.clear();
                          for (const auto& s : split_list(v)) c.power_set_mw.push_back(to_double(s));
                        },
                        [](const C& c) {
                          return join<double>(c.power_set_mw,
                                              [](const double& x) { return num(x); });
                        }}},
      {"noise_w", {[](C& c, S v) { c.noise_w = to_double(v); },
                   [](const C& c) { return num(c.noise_w); }}},
      {"kappa_omega", {[](C& c, S v) { c.kappa_omega = to_double(v); },
                       [](const C& c) { return num(c.kappa_omega); }}},
      {"power_cost_scale", {[](C& c, S v) { c.power_cost_scale = to_double(v); },
                            [](const C& c) { return num(c.power_cost_scale); }}},
      {"q_bar", {[](C& c, S v) { c.baseline_q_bar = to_double(v); },
                 [](const C& c) { return num(c.baseline_q_bar); }}},
      {"min_distance", {[](C& c, S v) { c.min_distance_m = to_double(v); },
                        [](const C& c) { return num(c.min_distance_m); }}},
      {"ber_literal", {[](C& c, S v) {
                         c.ber = to_bool(v) ? BerConvention::kLiteral
                                            : BerConvention::kConstellationSize;
                       },
                       [](const C& c) {
                         return std::string(c.ber == BerConvention::kLiteral ? "true" : "false");
                       }}},
      {"hidden", {[](C& c, S v) { c.hidden = to_int(v); },
                  [](const C& c) { return integer(c.hidden); }}},
      {"fc_activation", {[](C& c, S v) {
                           if (v == "relu") c.fc_activation = Activation::kRelu;
                           else if (v == "tanh") c.fc_activation = Activation::kTanh;
                           else throw ConfigError("fc_activation must be relu or tanh");
                         },
                         [](const C& c) {
                           return std::string(c.fc_activation == Activation::kTanh ? "tanh"
                                                                                   : "relu");
                         }}},
      {"clip", {[](C& c, S v) { c.ppo_clip = to_double(v); },
                [](const C& c) { return num(c.ppo_clip); }}},
      {"value_coef", {[](C& c, S v) { c.value_coef = to_double(v); },
                      [](const C& c) { return num(c.value_coef); }}},
      {"entropy_coef", {[](C& c, S v) { c.entropy_coef = to_double(v); },
                        [](const C& c) { return num(c.entropy_coef); }}},
      {"epochs", {[](C& c, S v) { c.epochs = to_int(v); },
                  [](const C& c) { return integer(c.epochs); }}},
      {"minibatches", {[](C& c, S v) { c.minibatches = to_int(v); },
                       [](const C& c) { return integer(c.minibatches); }}},
      {"learning_rate", {[](C& c, S v) { c.learning_rate = to_double(v); },
                         [](const C& c) { return num(c.learning_rate); }}},
      {"max_grad_norm", {[](C& c, S v) { c.max_grad_norm = to_double(v); },
                         [](const C& c) { return num(c.max_grad_norm); }}},
      {"broadcast_period", {[](C& c, S v) { c.broadcast_period = to_int(v); },
                            [](const C& c) { return integer(c.broadcast_period); }}},
      {"learning", {[](C& c, S v) { c.learning_enabled = to_bool(v); },
                    [](const C& c) { return std::string(c.learning_enabled ? "true" : "false"); }}},
  };
  return k;
}

const Key* find_key(const std::string& name) {
  for (const auto& [k, v] : keys())
    if (k == name) return &v;
  return nullptr;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_number failed");
  return std::string(buf, p);
}

RealizationConfig parse_config_text(const std::string& text) {
  RealizationConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value", line);
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("empty key or value", line);
    const Key* k = find_key(key);
    if (!k) throw ConfigError("unknown key '" + key + "'", line);
    if (seen.count(key))
      throw ConfigError("duplicate key '" + key + "' (first on line " +
                            std::to_string(seen[key]) + ")",
                        line);
    seen[key] = line;
    try {
      k->set(cfg, value);
      cfg.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what(), line);
    }
  }
  return cfg;
}

RealizationConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const RealizationConfig& cfg) {
  std::string out;
  for (const auto& [name, k] : keys()) out += name + " = " + k.get(cfg) + "\n";
  return out;
}

RunRecord make_run_record(const RealizationConfig& cfg, CampaignResult campaign) {
  RunRecord r;
  r.config = cfg;
  r.campaign = std::move(campaign);
  const int np = static_cast<int>(cfg.power_set_mw.size());
  r.weights_bias_everywhere =
      count_weights(cfg.num_base_stations, cfg.num_subcarriers, cfg.max_modulation, np,
                    WeightConvention::kBiasEverywhere, cfg.hidden);
  r.weights_only = count_weights(cfg.num_base_stations, cfg.num_subcarriers,
                                        cfg.max_modulation, np, WeightConvention::kWeightsOnly,
                                        cfg.hidden);
  const long w = static_cast<long>(parameter_count(cfg.network_dims()));
  const double seconds = cfg.ttis * cfg.tti_s;
  for (const auto& s : r.campaign.series) {
    ArchitectureOverhead o;
    o.kind = s.kind;
    o.weight_count = w;
    o.report = overhead_report(s.kind, cfg.tti_s, w, cfg.broadcast_period);
    o.measured_uplink_bps = s.uplink_bits_per_device / seconds;
    o.measured_downlink_bps = s.downlink_bits_per_device / seconds;
    r.overheads.push_back(o);
  }
  return r;
}

std::string metrics_csv(const RunRecord& run) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& s : run.campaign.series) {
    const std::string arch = to_string(s.kind);
    for (std::size_t t = 0; t < s.holding_mean.size(); ++t) {
      out += std::to_string(t + 1) + "," + arch;
      for (double v : {s.holding_mean[t], s.holding_std[t], s.overflow_mean[t], s.overflow_std[t],
                       s.power_mw_mean[t], s.power_mw_std[t], s.collisions_cum_mean[t],
                       s.collisions_cum_std[t]})
        out += "," + format_number(v);
      out += "\n";
    }
  }
  return out;
}

std::string summary_csv(const RunRecord& run) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (std::size_t i = 0; i < run.campaign.series.size(); ++i) {
    const auto& s = run.campaign.series[i];
    const auto& o = run.overheads[i];
    auto last = [](const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); };
    out += to_string(s.kind) + "," + std::to_string(s.realizations) + "," +
           format_number(o.report.uplink_bps) + "," + format_number(o.report.downlink_bps) + "," +
           format_number(last(s.collisions_cum_mean)) + "," + format_number(last(s.power_mw_mean)) +
           "," + format_number(last(s.holding_mean)) + "," + format_number(last(s.overflow_mean)) +
           "\n";
  }
  return out;
}

std::string run_json(const RunRecord& run) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = "gfla-run/1";
  ordered_json cfg;
  for (const auto& [name, k] : keys()) cfg[name] = k.get(run.config);
  j["config"] = cfg;
  j["seeds"] = run.campaign.seeds;
  j["wall_seconds"] = run.campaign.wall_seconds;
  auto wc = [](const WeightCount& w) {
    return ordered_json{{"gru", w.gru},
                        {"fully_connected", w.fully_connected},
                        {"actor_head", w.actor_head},
                        {"critic_head", w.critic_head},
                        {"total", w.total()}};
  };
  j["weights"] = {{"bias_everywhere", wc(run.weights_bias_everywhere)},
                  {"weights_only", wc(run.weights_only)}};
  ordered_json archs = ordered_json::array();
  for (std::size_t i = 0; i < run.campaign.series.size(); ++i) {
    const auto& s = run.campaign.series[i];
    const auto& o = run.overheads[i];
    ordered_json a;
    a["arch"] = to_string(s.kind);
    a["realizations"] = s.realizations;
    ordered_json ov{{"uplink_bps", o.report.uplink_bps},
                    {"downlink_bps", o.report.downlink_bps},
                    {"weight_count", o.weight_count},
                    {"measured_uplink_bps", o.measured_uplink_bps},
                    {"measured_downlink_bps", o.measured_downlink_bps}};
    if (s.kind == ArchitectureKind::kCentralizedLearning)
      ov["reported_downlink_bps"] = kReportedCldiDownlinkBps;
    a["overhead"] = ov;
    auto last = [](const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); };
    a["final"] = {{"collisions_cum", last(s.collisions_cum_mean)},
                  {"collisions_cum_std", last(s.collisions_cum_std)},
                  {"power_mw", last(s.power_mw_mean)},
                  {"power_mw_std", last(s.power_mw_std)},
                  {"holding", last(s.holding_mean)},
                  {"holding_std", last(s.holding_std)},
                  {"overflow", last(s.overflow_mean)},
                  {"overflow_std", last(s.overflow_std)}};
    ordered_json classes = ordered_json::array();
    for (std::size_t c = 0; c < s.holding_by_delay_class_mean.size(); ++c)
      classes.push_back({{"delay_constraint", run.config.delay_set[c]},
                         {"holding", last(s.holding_by_delay_class_mean[c])}});
    a["final_holding_by_delay"] = classes;
    a["audit"] = {{"conservation_violations", s.conservation_violations},
                  {"collision_recount_mismatches", s.collision_recount_mismatches}};
    a["series"] = {{"holding_mean", s.holding_mean},       {"holding_std", s.holding_std},
                   {"overflow_mean", s.overflow_mean},     {"overflow_std", s.overflow_std},
                   {"power_mw_mean", s.power_mw_mean},     {"power_mw_std", s.power_mw_std},
                   {"collisions_cum_mean", s.collisions_cum_mean},
                   {"collisions_cum_std", s.collisions_cum_std}};
    archs.push_back(a);
  }
  j["architectures"] = archs;
  ordered_json failures = ordered_json::array();
  for (const auto& f : run.campaign.failures)
    failures.push_back({{"arch", to_string(f.kind)}, {"seed", f.seed}, {"error", f.message}});
  j["failures"] = failures;
  return j.dump(1) + "\n";
}

void emit_results(const RunRecord& run, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());
  auto write = [&](const char* name, const std::string& body) {
    const auto path = out_dir / name;
    std::ofstream f(path, std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  };
  write("metrics.csv", metrics_csv(run));
  write("summary.csv", summary_csv(run));
  write("run.json", run_json(run));
}

}  // namespace gfla
