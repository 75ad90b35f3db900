#pragma once

// Realization driver: topology generation, the per-TTI phase loop, metric
// accumulation and multi-realization campaigns.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gfla/architectures.hpp"
#include "gfla/channel.hpp"
#include "gfla/mac.hpp"
#include "gfla/neural.hpp"
#include "gfla/posg.hpp"
#include "gfla/ppo.hpp"
#include "gfla/random.hpp"
#include "gfla/traffic.hpp"

namespace gfla {

struct RealizationConfig {
  // Scenario parameters.
  double symbol_rate = 1e5;  // f_S, symbols/s
  double radius_m = 300.0;
  int num_devices = 2560;
  int num_base_stations = 2;
  int num_subcarriers = 8;
  int num_preambles = 64;
  double path_loss_exponent = 3.5;
  int buffer_capacity = 25;
  int update_period = 200;  // T
  int packet_bytes = 100;
  double tti_s = 0.01;
  std::vector<int> delay_set{4, 8, 12};
  std::vector<double> arrival_rate_set{40.0, 60.0, 80.0};
  double gamma = 0.99;
  double p_on_mw = 320.0;
  double p_off_mw = 0.0;
  double max_doppler_hz = 10.0;

  // Experiment.
  std::vector<ArchitectureKind> architectures{ArchitectureKind::kCentralizedLearning};
  int ttis = 15000;
  int realizations = 1;
  std::uint64_t seed = 1;

  // Model knobs.
  int max_modulation = 4;
  double cw_a = 8.0;
  double slot_quantum = 0.0;  // <= 0: 1 / (2 CW_max)
  std::vector<double> power_set_mw{10.0, 20.0, 40.0, 80.0, 160.0};
  double noise_w = 1e-13;
  double kappa_omega = 1.0;
  double power_cost_scale = 1.0;  // multiplies the watt-valued cost terms
  double baseline_q_bar = 0.3;
  double min_distance_m = 1.0;
  BerConvention ber = BerConvention::kConstellationSize;

  // Learning.
  int hidden = 32;
  Activation fc_activation = Activation::kRelu;
  double ppo_clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  int epochs = 4;
  int minibatches = 10;
  double learning_rate = 7e-4;
  double max_grad_norm = 0.5;
  int broadcast_period = 200;
  bool learning_enabled = true;

  int packet_bits() const { return packet_bytes * 8; }
  ContentionConfig contention() const;
  PacketTiming timing() const;
  ActionSpace action_space() const;
  NetworkDims network_dims() const;
  LearnerSettings learner_settings() const;
  CostParams cost_params() const;
  // Throws ConfigError on inconsistent values.
  void validate() const;
};

struct DeviceProfile {
  int delay_constraint = 0;
  double arrival_rate = 0.0;
  int delay_class = 0;  // index into delay_set
};

struct Deployment {
  Topology topology;
  std::vector<DeviceProfile> profiles;
};

// Uniform positions on the disk for base stations and devices, nearest-BS
// association, per-device delay constraint and arrival rate.
Deployment generate_topology(const RealizationConfig& cfg, Rng& rng);

struct ContentionRecord {
  int device = 0;
  int bs = 0;
  int subcarrier = 0;
  int preamble = 0;
  int backoff = 0;
  bool won = false;
  bool collided = false;
};

// Collision events counted afresh from logged records: per domain, groups
// of at least two minimum-backoff contenders on one preamble.
int recount_collisions(const std::vector<ContentionRecord>& records);

struct TtiReport {
  int tti = 0;
  std::vector<Action> actions;
  std::vector<ContentionRecord> contention;
  std::vector<int> queued_before, arrivals, goodput, overflow, queued_after;
  std::vector<CostTerms> cost_terms;
  int collision_events = 0;
  int conservation_violations = 0;
  double holding_mean = 0.0;
  double overflow_mean = 0.0;
  double power_mw_mean = 0.0;
};

// Per-TTI cumulative averages of per-device means and the running collision
// sum.
struct MetricSeries {
  std::vector<double> holding;
  std::vector<double> overflow;
  std::vector<double> power_mw;
  std::vector<double> collisions_cum;
  std::vector<std::vector<double>> holding_by_delay_class;  // [class][tti]
  long conservation_violations = 0;
  long collision_recount_mismatches = 0;
  TrafficCounters traffic;
  int learner_updates = 0;
};

class Realization {
 public:
  Realization(const RealizationConfig& cfg, ArchitectureKind kind, std::uint64_t seed);
  ~Realization();
  Realization(const Realization&) = delete;
  Realization& operator=(const Realization&) = delete;

  // Advances one TTI through all phases.
  const TtiReport& step();
  // Runs the configured number of TTIs and returns the metric series.
  MetricSeries run();

  const RealizationConfig& config() const { return cfg_; }
  const Deployment& deployment() const { return deployment_; }
  const std::vector<BufferState>& buffers() const { return buffers_; }
  const FadingState& fading() const { return fading_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const TtiReport& last_report() const { return report_; }
  Controller& controller() { return *controller_; }
  // Replaces the controller, e.g. with a scripted policy in tests.
  void set_controller(std::unique_ptr<Controller> c) { controller_ = std::move(c); }
  int tti() const { return tti_; }

 private:
  void build_observations();
  void accumulate(const TtiReport& r);

  RealizationConfig cfg_;
  ArchitectureKind kind_;
  ContentionConfig contention_cfg_;
  PacketTiming timing_;
  ActionSpace space_;
  CostParams cost_;
  double mu_;
  Deployment deployment_;
  FadingState fading_;
  std::vector<BufferState> buffers_;
  std::vector<int> radio_state_;
  std::vector<bool> penalized_;
  std::vector<Observation> observations_;
  std::unique_ptr<Controller> controller_;
  Rng fading_rng_, traffic_rng_, contention_rng_, phy_rng_, policy_rng_, training_rng_;
  TtiReport report_;
  MetricSeries series_;
  std::vector<double> sums_;  // running sums behind the cumulative averages
  std::vector<double> class_sums_;
  std::vector<int> class_sizes_;
  int tti_ = 0;
};

// Per-realization seeds derived from the master seed.
std::vector<std::uint64_t> realization_seeds(std::uint64_t master, int count);

struct AggregateSeries {
  ArchitectureKind kind;
  int realizations = 0;  // successful ones
  std::vector<double> holding_mean, holding_std;
  std::vector<double> overflow_mean, overflow_std;
  std::vector<double> power_mw_mean, power_mw_std;
  std::vector<double> collisions_cum_mean, collisions_cum_std;
  std::vector<std::vector<double>> holding_by_delay_class_mean;
  long conservation_violations = 0;
  long collision_recount_mismatches = 0;
  double uplink_bits_per_device = 0.0;
  double downlink_bits_per_device = 0.0;
};

struct RealizationFailure {
  ArchitectureKind kind;
  std::uint64_t seed = 0;
  std::string message;
};

struct CampaignResult {
  std::vector<std::uint64_t> seeds;
  std::vector<AggregateSeries> series;  // one per architecture, config order
  std::vector<RealizationFailure> failures;
  double wall_seconds = 0.0;
};

struct CampaignOptions {
  int workers = 0;  // <= 0: GFLA_WORKERS or hardware concurrency
  bool progress = false;
};

// Worker count from GFLA_WORKERS, else hardware concurrency (at least 1).
int default_workers();

// Each (architecture, seed) pair is an independent realization; all
// architectures share the same seeds, so environment randomness is paired.
CampaignResult run_campaign(const RealizationConfig& cfg, const CampaignOptions& options = {});

}  // namespace gfla
