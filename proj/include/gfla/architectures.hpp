#pragma once

// Device controllers: independent learners (IL), distributed actors with a
// central critic (DACC), centralized learning with distributed inference
// (CLDI) and the reactive-HARQ power-boosting baseline.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gfla/neural.hpp"
#include "gfla/posg.hpp"
#include "gfla/ppo.hpp"
#include "gfla/random.hpp"

namespace gfla {

enum class ArchitectureKind { kIndependent, kCentralCritic, kCentralizedLearning, kBaseline };

std::string to_string(ArchitectureKind kind);
// Accepts il, dacc, cldi, baseline (case-insensitive).
ArchitectureKind parse_architecture(const std::string& name);

struct OverheadReport {
  double uplink_bps = 0.0;
  double downlink_bps = 0.0;
};

// Per-device coordination traffic with 16-bit values: one buffer report
// up per TTI for DACC/CLDI, one critic value down per TTI for DACC, and the
// whole weight set down every broadcast period for CLDI.
OverheadReport overhead_report(ArchitectureKind kind, double tti_s, long weight_count,
                               int broadcast_period);

// Reference CLDI downlink figure (2562 weights), printed next to the
// computed value.
inline constexpr double kReportedCldiDownlinkBps = 20496.0;

// What a device learns about its own transmission in a TTI.
struct DeviceFeedback {
  bool transmitted = false;  // won contention and sent its data
  bool collided = false;
  int acks = 0;
  int nacks = 0;
};

struct StepOutcome {
  std::span<const Observation> next_observations;
  std::span<const CostTerms> cost_terms;
  std::span<const DeviceFeedback> feedback;
};

struct TrafficCounters {
  double uplink_bits = 0.0;    // summed over devices
  double downlink_bits = 0.0;  // per receiving device, summed
};

struct LearnerSettings {
  NetworkDims dims;
  PpoHyperparams ppo;
  FeatureScaling scaling;
  CostParams cost;
  int update_period = 200;
  int broadcast_period = 200;
  bool learning_enabled = true;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ArchitectureKind kind() const = 0;

  // Phase 2: choose every device's action from its local observation.
  virtual void act(std::span<const Observation> observations, std::span<Action> actions,
                   Rng& policy_rng) = 0;
  // Phases 8-9: record experience and train when rollouts are full.
  virtual void observe(const StepOutcome& outcome, Rng& training_rng) = 0;

  const TrafficCounters& traffic() const { return traffic_; }
  int updates() const { return updates_; }

 protected:
  TrafficCounters traffic_;
  int updates_ = 0;
};

// One device's private learner state.
struct LearnerAgent {
  WeightBundle weights;
  AdamState adam;
  RolloutBuffer buffer;
  ReturnScaler scaler;
  Vector hidden;
  Experience pending;
};

class IndependentLearners : public Controller {
 public:
  IndependentLearners(int num_devices, const ActionSpace& space, const LearnerSettings& settings,
                      Rng& init_rng);
  ArchitectureKind kind() const override { return ArchitectureKind::kIndependent; }
  void act(std::span<const Observation> observations, std::span<Action> actions,
           Rng& policy_rng) override;
  void observe(const StepOutcome& outcome, Rng& training_rng) override;

  const LearnerAgent& agent(int i) const { return agents_[i]; }

 private:
  ActionSpace space_;
  LearnerSettings settings_;
  std::vector<LearnerAgent> agents_;
};

class CentralCritic : public Controller {
 public:
  CentralCritic(int num_devices, const ActionSpace& space, const LearnerSettings& settings,
                Rng& init_rng);
  ArchitectureKind kind() const override { return ArchitectureKind::kCentralCritic; }
  void act(std::span<const Observation> observations, std::span<Action> actions,
           Rng& policy_rng) override;
  void observe(const StepOutcome& outcome, Rng& training_rng) override;

  // Simulates a lost buffer report for the coming TTI: the edge skips its
  // update data and devices reuse their last fed-back value.
  void drop_report_next_tti() { report_missing_ = true; }

  const LearnerAgent& actor(int i) const { return actors_[i]; }
  const LearnerAgent& critic() const { return critic_; }
  // Value fed back to every device in the last TTI.
  double last_feedback() const { return fed_value_; }
  int missed_reports() const { return missed_reports_; }

 private:
  std::vector<double> pooled_features(std::span<const Observation> observations) const;
  double edge_value(const std::vector<double>& features, Vector* hidden_out) const;

  ActionSpace space_;
  LearnerSettings settings_;
  std::vector<LearnerAgent> actors_;
  LearnerAgent critic_;
  double fed_value_ = 0.0;
  bool report_missing_ = false;
  bool skip_edge_record_ = false;
  int missed_reports_ = 0;
};

class CentralizedLearner : public Controller {
 public:
  CentralizedLearner(int num_devices, const ActionSpace& space, const LearnerSettings& settings,
                     Rng& init_rng);
  ArchitectureKind kind() const override { return ArchitectureKind::kCentralizedLearning; }
  void act(std::span<const Observation> observations, std::span<Action> actions,
           Rng& policy_rng) override;
  void observe(const StepOutcome& outcome, Rng& training_rng) override;

  // Applies a serialized weight broadcast to the devices; on decode failure
  // they keep the previous weights. Returns whether the swap happened.
  bool apply_broadcast(std::span<const std::uint8_t> bytes);

  const WeightBundle& edge_weights() const { return edge_; }
  const WeightBundle& device_weights() const { return deployed_; }
  int pooled_experiences() const;
  int failed_broadcasts() const { return failed_broadcasts_; }

 private:
  void broadcast();

  ActionSpace space_;
  LearnerSettings settings_;
  WeightBundle edge_;
  AdamState adam_;
  ReturnScaler scaler_;
  WeightBundle deployed_;
  std::vector<RolloutBuffer> streams_;
  Matrix hidden_;  // hidden x N_U
  std::vector<Experience> pending_;
  long ttis_ = 0;
  int failed_broadcasts_ = 0;
};

struct BaselineState {
  double q_bar = 0.3;
  int power_index = 0;
  int modulation = 1;
  bool has_feedback = false;  // a transmission outcome not yet acted upon
  bool last_success = false;
};

struct BaselineLimits {
  int num_powers = 5;
  int max_modulation = 4;
  int num_subcarriers = 8;
};

// Congestion-thresholded access with power boosting and modulation
// stepping driven by the last transmission's HARQ outcome.
Action baseline_step(BaselineState& state, const Observation& o, int delay_constraint,
                     const BaselineLimits& limits, Rng& rng);
void baseline_feedback(BaselineState& state, const DeviceFeedback& fb);

class BaselineController : public Controller {
 public:
  BaselineController(std::vector<int> delay_constraints, const BaselineLimits& limits,
                     double q_bar);
  ArchitectureKind kind() const override { return ArchitectureKind::kBaseline; }
  void act(std::span<const Observation> observations, std::span<Action> actions,
           Rng& policy_rng) override;
  void observe(const StepOutcome& outcome, Rng& training_rng) override;

  const BaselineState& state(int i) const { return states_[i]; }

 private:
  std::vector<int> delay_constraints_;
  BaselineLimits limits_;
  std::vector<BaselineState> states_;
};

}  // namespace gfla
