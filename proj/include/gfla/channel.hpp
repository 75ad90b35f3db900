#pragma once

// Radio channel: link geometry, Gauss-Markov fading, interference and
// bit/packet error probabilities.

#include <complex>
#include <span>
#include <vector>

#include "gfla/random.hpp"

namespace gfla {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Device and base-station placement with derived link distances.
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<Point> devices, std::vector<Point> base_stations, double radius,
           double path_loss_exponent, int num_subcarriers, int num_preambles,
           double min_distance = 1.0);

  int num_devices() const { return static_cast<int>(devices_.size()); }
  int num_base_stations() const { return static_cast<int>(base_stations_.size()); }
  int num_subcarriers() const { return num_subcarriers_; }
  int num_preambles() const { return num_preambles_; }
  double radius() const { return radius_; }
  double path_loss_exponent() const { return alpha_; }

  const std::vector<Point>& devices() const { return devices_; }
  const std::vector<Point>& base_stations() const { return base_stations_; }

  // Clamped to min_distance from below.
  double distance(int device, int bs) const { return distance_[index(device, bs)]; }
  // d^-alpha
  double path_gain(int device, int bs) const { return path_gain_[index(device, bs)]; }
  // Nearest BS, ties to the lowest index.
  int serving_bs(int device) const { return association_[device]; }

 private:
  std::size_t index(int device, int bs) const {
    return static_cast<std::size_t>(device) * base_stations_.size() + static_cast<std::size_t>(bs);
  }

  std::vector<Point> devices_;
  std::vector<Point> base_stations_;
  double radius_ = 0.0;
  double alpha_ = 0.0;
  int num_subcarriers_ = 0;
  int num_preambles_ = 0;
  std::vector<double> distance_;
  std::vector<double> path_gain_;
  std::vector<int> association_;
};

// J0 via the standard library's cylindrical Bessel function.
double bessel_j0(double x);

// kappa = J0(2 pi f_max dt).
double correlation_coefficient(double max_doppler_hz, double tti_s);

// Small-scale fading coefficient for every (device, BS, subcarrier) triple.
struct FadingState {
  int num_devices = 0;
  int num_base_stations = 0;
  int num_subcarriers = 0;
  double kappa = 1.0;
  std::vector<std::complex<double>> h;

  // Coefficients drawn from the stationary CN(0, 1) law.
  static FadingState stationary(int num_devices, int num_base_stations, int num_subcarriers,
                                double kappa, Rng& rng);

  double innovation_variance() const { return 1.0 - kappa * kappa; }

  std::size_t index(int device, int bs, int subcarrier) const {
    return (static_cast<std::size_t>(device) * num_base_stations + bs) * num_subcarriers +
           subcarrier;
  }
  const std::complex<double>& at(int device, int bs, int subcarrier) const {
    return h[index(device, bs, subcarrier)];
  }
  double power_gain(int device, int bs, int subcarrier) const {
    return std::norm(at(device, bs, subcarrier));
  }
};

// h' = kappa h + n, n ~ CN(0, 1 - kappa^2), independently per entry.
void step_fading(FadingState& state, Rng& rng);

struct Transmission {
  int device = 0;
  double power_w = 0.0;
  int subcarrier = 0;
};

// Sum over active co-channel transmitters other than the victim of
// p |h_{n,bs,k}|^2 d_{n,bs}^-alpha.
double interference_power(std::span<const Transmission> transmitters, const Topology& topology,
                          const FadingState& fading, int victim, int bs, int subcarrier);

enum class BerConvention {
  kConstellationSize,  // beta_eff = 2^beta
  kLiteral,            // beta_eff = beta
};

// Received SINR of a transmission with the given composite gain |h|^2 d^-alpha.
double sinr(double power_w, double gain, double interference_w, double noise_w);

// QAM bit error approximation, clamped to [0, 1].
double bit_error_prob(double power_w, double gain, double interference_w, double noise_w,
                      int modulation, int max_modulation,
                      BerConvention convention = BerConvention::kConstellationSize);

// Same as above, from a precomputed SINR.
double bit_error_prob_from_sinr(double sinr_value, int modulation, int max_modulation,
                                BerConvention convention = BerConvention::kConstellationSize);

// 1 - (1 - P_e)^L.
double packet_loss_prob(double bit_error, int packet_bits);

}  // namespace gfla
