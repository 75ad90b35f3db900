#include "gfla/posg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

#include "gfla/errors.hpp"

namespace gfla {

ActionSpace::ActionSpace(int max_modulation, int num_powers, int num_subcarriers)
    : max_modulation_(max_modulation), num_powers_(num_powers), num_subcarriers_(num_subcarriers) {
  if (max_modulation < 1 || num_powers < 1 || num_subcarriers < 1)
    throw DomainError("action space dimensions must be positive");
}

int ActionSpace::encode(const Action& a) const {
  if (a.radio < 0 || a.radio > 1 || a.modulation < 1 || a.modulation > max_modulation_ ||
      a.power_index < 0 || a.power_index >= num_powers_ || a.subcarrier < 0 ||
      a.subcarrier >= num_subcarriers_)
    throw RangeError("encode_action: component out of range");
  return ((a.radio * max_modulation_ + (a.modulation - 1)) * num_powers_ + a.power_index) *
             num_subcarriers_ +
         a.subcarrier;
}

Action ActionSpace::decode(int index) const {
  if (index < 0 || index >= size())
    throw RangeError("decode_action: index " + std::to_string(index));
  Action a;
  a.subcarrier = index % num_subcarriers_;
  index /= num_subcarriers_;
  a.power_index = index % num_powers_;
  index /= num_powers_;
  a.modulation = index % max_modulation_ + 1;
  a.radio = index / max_modulation_;
  return a;
}

double mu(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("mu: gamma must lie in (0, 1)");
  // Evaluated from gamma's shortest decimal form in extended precision so
  // that decimal inputs such as 0.99 give exact ratios.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf - 1, gamma);
  *res.ptr = '\0';
  const long double g = std::strtold(buf, nullptr);
  return static_cast<double>(g / (1.0L - g));
}

double omega_update(int queued, int overflow, int delay_constraint, double mu_value,
                    double kappa_omega) {
  return kappa_omega * std::max(0.0, queued + mu_value * overflow - delay_constraint);
}

double power_cost(const CostTerms& t, const CostParams& params) {
  return t.radio ? params.p_on_w + t.tx_power_w : params.p_off_w;
}

double local_cost(const CostTerms& t, const CostParams& params) {
  return power_cost(t, params) + t.omega * (t.queued + mu(params.gamma) * t.overflow);
}

double global_cost(std::span<const CostTerms> terms, const CostParams& params) {
  double total = 0.0;
  for (const auto& t : terms) total += local_cost(t, params);
  return total;
}

double cldi_cost(std::span<const CostTerms> terms, const CostParams& params) {
  if (terms.empty()) throw DomainError("cldi_cost: no devices");
  return global_cost(terms, params) / static_cast<double>(terms.size());
}

int feature_dim(int num_base_stations, int num_subcarriers) {
  return num_base_stations * num_subcarriers + 4;
}

void encode_features(const Observation& o, const FeatureScaling& scaling, std::span<double> out) {
  const std::size_t n = o.channel_gains.size();
  if (out.size() != n + 4) throw RangeError("encode_features: output size mismatch");
  // Link SNR at 1 W in dB, centred near typical cell-edge values.
  for (std::size_t i = 0; i < n; ++i) {
    const double snr_db = 10.0 * std::log10(std::max(o.channel_gains[i] / scaling.noise_w, 1e-30));
    out[i] = (snr_db - 50.0) / 20.0;
  }
  const double cap = scaling.buffer_capacity;
  out[n] = o.queued / cap * 4.0;
  out[n + 1] = o.arrivals / 4.0;
  out[n + 2] = o.goodput / 4.0;
  out[n + 3] = o.overflow / 4.0;
}

std::vector<double> encode_features(const Observation& o, const FeatureScaling& scaling) {
  std::vector<double> out(o.channel_gains.size() + 4);
  encode_features(o, scaling, out);
  return out;
}

}  // namespace gfla
