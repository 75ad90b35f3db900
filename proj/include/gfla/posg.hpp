#pragma once

// Observation/action encodings and the per-device cost of the stochastic game.

#include <span>
#include <vector>

namespace gfla {

struct Observation {
  std::vector<double> channel_gains;  // |h_{i,j,k}|^2 d_{i,j}^-alpha, BS-major
  int radio_state = 0;                // x in the previous TTI
  int queued = 0;                     // b
  int arrivals = 0;                   // l
  int goodput = 0;                    // g
  int overflow = 0;                   // xi
};

struct Action {
  int radio = 0;        // x
  int modulation = 1;   // beta in 1..M
  int power_index = 0;  // into the power set
  int subcarrier = 0;   // 0-based

  bool operator==(const Action&) const = default;
};

// Flat categorical index <-> (x, beta, p, k), lexicographic with x most
// significant and subcarrier least significant.
class ActionSpace {
 public:
  ActionSpace(int max_modulation, int num_powers, int num_subcarriers);

  int size() const { return 2 * max_modulation_ * num_powers_ * num_subcarriers_; }
  int max_modulation() const { return max_modulation_; }
  int num_powers() const { return num_powers_; }
  int num_subcarriers() const { return num_subcarriers_; }

  int encode(const Action& a) const;
  Action decode(int index) const;

 private:
  int max_modulation_;
  int num_powers_;
  int num_subcarriers_;
};

struct CostParams {
  double p_on_w = 0.320;
  double p_off_w = 0.0;
  double gamma = 0.99;
  double kappa_omega = 1.0;
};

// Overflow penalty gamma / (1 - gamma).
double mu(double gamma);

// kappa_omega * max(0, b + mu xi - delta).
double omega_update(int queued, int overflow, int delay_constraint, double mu_value,
                    double kappa_omega);

struct CostTerms {
  int radio = 0;
  double tx_power_w = 0.0;
  double omega = 0.0;
  int queued = 0;
  int overflow = 0;
};

double power_cost(const CostTerms& t, const CostParams& params);
// x (P_ON + p) + (1 - x) P_OFF + omega (b + mu xi).
double local_cost(const CostTerms& t, const CostParams& params);
double global_cost(std::span<const CostTerms> terms, const CostParams& params);
double cldi_cost(std::span<const CostTerms> terms, const CostParams& params);

// Network input layout: N_B N_S channel features followed by b, l, g, xi.
struct FeatureScaling {
  double noise_w = 1e-13;
  int buffer_capacity = 25;
};

int feature_dim(int num_base_stations, int num_subcarriers);
void encode_features(const Observation& o, const FeatureScaling& scaling, std::span<double> out);
std::vector<double> encode_features(const Observation& o, const FeatureScaling& scaling);

}  // namespace gfla
