#include "gfla/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gfla/errors.hpp"

namespace gfla {

Topology::Topology(std::vector<Point> devices, std::vector<Point> base_stations, double radius,
                   double path_loss_exponent, int num_subcarriers, int num_preambles,
                   double min_distance)
    : devices_(std::move(devices)),
      base_stations_(std::move(base_stations)),
      radius_(radius),
      alpha_(path_loss_exponent),
      num_subcarriers_(num_subcarriers),
      num_preambles_(num_preambles) {
  if (base_stations_.empty()) throw DomainError("topology needs at least one base station");
  if (min_distance <= 0.0) throw DomainError("minimum distance must be positive");
  distance_.resize(devices_.size() * base_stations_.size());
  path_gain_.resize(distance_.size());
  association_.resize(devices_.size());
  for (int i = 0; i < num_devices(); ++i) {
    int best = 0;
    for (int j = 0; j < num_base_stations(); ++j) {
      const double dx = devices_[i].x - base_stations_[j].x;
      const double dy = devices_[i].y - base_stations_[j].y;
      const double d = std::max(std::hypot(dx, dy), min_distance);
      distance_[index(i, j)] = d;
      path_gain_[index(i, j)] = std::pow(d, -alpha_);
      if (d < distance_[index(i, best)]) best = j;
    }
    association_[i] = best;
  }
}

double bessel_j0(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j0: non-finite argument");
  return std::cyl_bessel_j(0.0, std::abs(x));
}

double correlation_coefficient(double max_doppler_hz, double tti_s) {
  if (!(max_doppler_hz >= 0.0)) throw DomainError("correlation_coefficient: negative Doppler");
  if (!(tti_s > 0.0)) throw DomainError("correlation_coefficient: TTI must be positive");
  return bessel_j0(2.0 * std::numbers::pi * max_doppler_hz * tti_s);
}

FadingState FadingState::stationary(int num_devices, int num_base_stations, int num_subcarriers,
                                    double kappa, Rng& rng) {
  if (std::abs(kappa) > 1.0) throw DomainError("fading correlation must lie in [-1, 1]");
  FadingState s;
  s.num_devices = num_devices;
  s.num_base_stations = num_base_stations;
  s.num_subcarriers = num_subcarriers;
  s.kappa = kappa;
  s.h.resize(static_cast<std::size_t>(num_devices) * num_base_stations * num_subcarriers);
  for (auto& c : s.h) c = complex_normal(rng, 1.0);
  return s;
}

void step_fading(FadingState& state, Rng& rng) {
  const double var = state.innovation_variance();
  if (var <= 0.0) return;
  for (auto& c : state.h) c = state.kappa * c + complex_normal(rng, var);
}

double interference_power(std::span<const Transmission> transmitters, const Topology& topology,
                          const FadingState& fading, int victim, int bs, int subcarrier) {
  if (subcarrier < 0 || subcarrier >= fading.num_subcarriers)
    throw RangeError("interference_power: subcarrier " + std::to_string(subcarrier));
  double total = 0.0;
  for (const auto& t : transmitters) {
    if (t.device == victim || t.subcarrier != subcarrier) continue;
    total += t.power_w * fading.power_gain(t.device, bs, subcarrier) * topology.path_gain(t.device, bs);
  }
  return total;
}

double sinr(double power_w, double gain, double interference_w, double noise_w) {
  if (power_w < 0.0 || gain < 0.0 || interference_w < 0.0)
    throw DomainError("sinr: negative power, gain or interference");
  if (!(noise_w > 0.0)) throw DomainError("sinr: noise power must be positive");
  return power_w * gain / (interference_w + noise_w);
}

double bit_error_prob_from_sinr(double sinr_value, int modulation, int max_modulation,
                                BerConvention convention) {
  if (modulation < 1 || modulation > max_modulation)
    throw DomainError("bit_error_prob: modulation order " + std::to_string(modulation));
  double p = 0.0;
  if (modulation == 1) {
    p = 0.5 * std::erfc(std::sqrt(sinr_value));
  } else {
    const double beta_eff = convention == BerConvention::kConstellationSize
                                ? std::ldexp(1.0, modulation)
                                : static_cast<double>(modulation);
    const double arg = 3.0 * std::log2(beta_eff) * sinr_value / (2.0 * (beta_eff - 1.0));
    p = 2.0 * std::erfc(std::sqrt(arg));
  }
  // The 2 erfc(.) branch exceeds 1 at low SINR.
  return std::clamp(p, 0.0, 1.0);
}

double bit_error_prob(double power_w, double gain, double interference_w, double noise_w,
                      int modulation, int max_modulation, BerConvention convention) {
  return bit_error_prob_from_sinr(sinr(power_w, gain, interference_w, noise_w), modulation,
                                  max_modulation, convention);
}

double packet_loss_prob(double bit_error, int packet_bits) {
  if (bit_error < 0.0 || bit_error > 1.0) throw DomainError("packet_loss_prob: P_e outside [0,1]");
  if (packet_bits < 1) throw DomainError("packet_loss_prob: packet length must be >= 1 bit");
  // log1p keeps precision when P_e is tiny.
  if (bit_error == 1.0) return 1.0;
  return -std::expm1(packet_bits * std::log1p(-bit_error));
}

}  // namespace gfla
