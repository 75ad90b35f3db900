#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "gfla/channel.hpp"
#include "gfla/config.hpp"
#include "gfla/errors.hpp"
#include "gfla/mac.hpp"
#include "gfla/neural.hpp"
#include "gfla/posg.hpp"
#include "gfla/traffic.hpp"
#include "oracles.hpp"

namespace py = pybind11;

namespace {

py::dict series_dict(const gfla::AggregateSeries& s) {
  py::dict d;
  d["arch"] = gfla::to_string(s.kind);
  d["realizations"] = s.realizations;
  d["holding_mean"] = s.holding_mean;
  d["holding_std"] = s.holding_std;
  d["overflow_mean"] = s.overflow_mean;
  d["overflow_std"] = s.overflow_std;
  d["power_mw_mean"] = s.power_mw_mean;
  d["power_mw_std"] = s.power_mw_std;
  d["collisions_cum_mean"] = s.collisions_cum_mean;
  d["collisions_cum_std"] = s.collisions_cum_std;
  d["conservation_violations"] = s.conservation_violations;
  return d;
}

// Runs a campaign from config text; optionally writes the result files.
py::dict run(const std::string& config_text, const std::string& out_dir, int workers) {
  const auto cfg = gfla::parse_config_text(config_text);
  gfla::CampaignResult result;
  {
    py::gil_scoped_release release;
    result = gfla::run_campaign(cfg, {workers, false});
  }
  const auto record = gfla::make_run_record(cfg, std::move(result));
  if (!out_dir.empty()) gfla::emit_results(record, out_dir);
  py::list series;
  for (const auto& s : record.campaign.series) series.append(series_dict(s));
  py::dict out;
  out["seeds"] = record.campaign.seeds;
  out["series"] = series;
  out["metrics_csv"] = gfla::metrics_csv(record);
  out["summary_csv"] = gfla::summary_csv(record);
  out["failures"] = record.campaign.failures.size();
  return out;
}

py::dict weight_counts(int nb, int ns, int m, int np, const std::string& convention, int hidden) {
  gfla::WeightConvention c;
  if (convention == "bias_everywhere") {
    c = gfla::WeightConvention::kBiasEverywhere;
  } else if (convention == "weights_only") {
    c = gfla::WeightConvention::kWeightsOnly;
  } else {
    throw py::value_error("convention must be bias_everywhere or weights_only");
  }
  const auto w = gfla::count_weights(nb, ns, m, np, c, hidden);
  py::dict d;
  d["gru"] = w.gru;
  d["fully_connected"] = w.fully_connected;
  d["actor_head"] = w.actor_head;
  d["critic_head"] = w.critic_head;
  d["total"] = w.total();
  return d;
}

}  // namespace

PYBIND11_MODULE(_gfla, m) {
  m.doc() = "Grant-free uplink link adaptation simulator";

  py::register_exception<gfla::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<gfla::DecodeError>(m, "DecodeError", PyExc_ValueError);
  py::register_exception<gfla::DomainError>(m, "DomainError", PyExc_ValueError);

  m.def("mu", &gfla::mu, py::arg("gamma"));
  m.def("omega", &gfla::omega_update, py::arg("queued"), py::arg("overflow"),
        py::arg("delay_constraint"), py::arg("mu"), py::arg("kappa_omega") = 1.0);
  m.def("bessel_j0", &gfla::bessel_j0, py::arg("x"));
  m.def("correlation_coefficient", &gfla::correlation_coefficient, py::arg("max_doppler_hz"),
        py::arg("tti_s"));
  m.def(
      "bit_error_prob",
      [](double sinr, int modulation, int max_modulation, bool literal) {
        return gfla::bit_error_prob_from_sinr(
            sinr, modulation, max_modulation,
            literal ? gfla::BerConvention::kLiteral : gfla::BerConvention::kConstellationSize);
      },
      py::arg("sinr"), py::arg("modulation"), py::arg("max_modulation") = 4,
      py::arg("literal") = false);
  m.def("packet_loss_prob", &gfla::packet_loss_prob, py::arg("bit_error"),
        py::arg("packet_bits") = 800);
  m.def(
      "cw_min",
      [](int modulation, double a, int max_modulation) {
        gfla::ContentionConfig c;
        c.a = a;
        c.max_modulation = max_modulation;
        return gfla::cw_min(modulation, c);
      },
      py::arg("modulation"), py::arg("a") = 8.0, py::arg("max_modulation") = 4);
  m.def(
      "packets_per_tti",
      [](int modulation, double tx_time, int packet_bits, double symbol_rate) {
        gfla::PacketTiming t;
        t.packet_bits = packet_bits;
        t.symbol_duration = 1.0 / symbol_rate;
        return gfla::packets_per_tti(modulation, tx_time, t);
      },
      py::arg("modulation"), py::arg("tx_time"), py::arg("packet_bits") = 800,
      py::arg("symbol_rate") = 1e5);
  m.def(
      "update_buffer",
      [](int queued, int arrivals, int goodput, int capacity) {
        const auto u = gfla::update_buffer(queued, arrivals, goodput, capacity);
        return py::make_tuple(u.queued, u.overflow);
      },
      py::arg("queued"), py::arg("arrivals"), py::arg("goodput"), py::arg("capacity") = 25);
  m.def("weight_counts", &weight_counts, py::arg("base_stations") = 2,
        py::arg("subcarriers") = 8, py::arg("max_modulation") = 4, py::arg("powers") = 5,
        py::arg("convention") = "bias_everywhere", py::arg("hidden") = 32);
  m.def(
      "overhead",
      [](const std::string& arch, double tti_s, long weights, int period) {
        const auto r = gfla::overhead_report(gfla::parse_architecture(arch), tti_s, weights, period);
        return py::make_tuple(r.uplink_bps, r.downlink_bps);
      },
      py::arg("arch"), py::arg("tti_s") = 0.01, py::arg("weight_count") = 17793,
      py::arg("broadcast_period") = 200);
  m.attr("REPORTED_CLDI_DOWNLINK_BPS") = gfla::kReportedCldiDownlinkBps;
  m.def(
      "to_half", [](double v) { return gfla::to_half(v); }, py::arg("value"));
  m.def(
      "from_half", [](std::uint16_t h) { return gfla::from_half(h); }, py::arg("bits"));

  m.def(
      "normalize_config",
      [](const std::string& text) { return gfla::config_to_text(gfla::parse_config_text(text)); },
      py::arg("text"), "Parses config text and returns every key with its effective value.");
  m.def("run", &run, py::arg("config_text"), py::arg("out_dir") = "", py::arg("workers") = 1,
        "Runs a campaign; returns per-architecture series and the CSV texts.");
  m.def(
      "verify",
      [] {
        std::vector<py::tuple> out;
        for (const auto& c : gfla::oracle::full_suite())
          out.push_back(py::make_tuple(c.name, c.passed, c.detail));
        return out;
      },
      "Runs the oracle suite; returns (name, passed, detail) tuples.");
}
