#pragma once

// Clipped-surrogate PPO over recurrent rollouts.

#include <cstdint>
#include <span>
#include <vector>

#include "gfla/neural.hpp"
#include "gfla/random.hpp"

namespace gfla {

struct PpoHyperparams {
  double clip = 0.2;
  double value_coef = 0.5;     // k1
  double entropy_coef = 0.01;  // k2
  int epochs = 4;
  int minibatches = 10;
  double gamma = 0.99;
  double learning_rate = 7e-4;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;
  // Which parts of the objective this learner owns. A device actor that
  // receives its baseline from elsewhere trains the policy terms only; a
  // stand-alone critic trains the value term only.
  bool policy_terms = true;
  bool value_terms = true;

  void validate() const;
};

struct Experience {
  std::vector<double> features;       // network input at t
  std::vector<double> next_features;  // network input at t + 1
  Vector hidden;                      // recurrent state entering step t
  int action = 0;
  double cost = 0.0;
  double log_prob = 0.0;  // behaviour policy
  double value = 0.0;     // critic estimate, return units
};

// Fixed-capacity experience array for one agent stream.
class RolloutBuffer {
 public:
  explicit RolloutBuffer(int capacity = 200);

  void push(Experience e);
  bool full() const { return static_cast<int>(items_.size()) == capacity_; }
  bool empty() const { return items_.empty(); }
  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }
  void clear();

  const std::vector<Experience>& items() const { return items_; }
  const Experience& operator[](int i) const { return items_[i]; }

  // Critic value of the observation following the last tuple.
  double bootstrap_value = 0.0;

 private:
  int capacity_;
  std::vector<Experience> items_;
};

struct ReturnsAndAdvantages {
  std::vector<double> returns;
  std::vector<double> advantages;
};

// Rewards are negated costs. return_t = sum_k gamma^(k-t) r_k +
// gamma^(T-t) bootstrap; advantage_t = return_t - V_t (not normalized).
ReturnsAndAdvantages compute_returns_and_advantages(const RolloutBuffer& buffer, double gamma,
                                                    double bootstrap_value);

// Zero mean, unit variance (sigma floored at eps). Fewer than two samples
// are left untouched.
void normalize_advantages(std::span<double> advantages, double eps = 1e-8);

// min(G A, clip(G, 1 - eps, 1 + eps) A) with G = exp(lp_new - lp_old).
double clipped_surrogate(double log_prob_new, double log_prob_old, double advantage, double clip);

struct SurrogateBatch {
  Matrix features;  // input_dim x B
  Matrix hidden;    // hidden x B
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> value_targets;  // in network output units
};

struct SurrogateResult {
  double objective = 0.0;  // J_clip - k1 J_VF + k2 H
  double clip_term = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Gradients gradient;  // d objective / d weights (ascent direction)
};

SurrogateResult surrogate_objective(const SurrogateBatch& batch, const WeightBundle& weights,
                                    const PpoHyperparams& hyper);

// Running standard deviation of observed returns; critics regress
// return / scale so that the value loss does not swamp the clipped
// gradient norm.
class ReturnScaler {
 public:
  void update(std::span<const double> returns);
  double scale() const;

 private:
  double count_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct PpoUpdateStats {
  int optimizer_steps = 0;
  int samples = 0;
  double objective = 0.0;  // last minibatch
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  std::uint64_t old_policy_checksum_before = 0;
  std::uint64_t old_policy_checksum_after = 0;
};

// Epoch/minibatch PPO over one or more streams, each with its own
// bootstrap value. Old log-probabilities are evaluated once on a frozen
// snapshot of the weights. Streams are cleared afterwards. On a numerical
// error the weights and optimizer state are restored and the error
// rethrown.
PpoUpdateStats ppo_update(std::span<RolloutBuffer> streams, WeightBundle& weights,
                          AdamState& adam, const PpoHyperparams& hyper, Rng& rng,
                          ReturnScaler* scaler = nullptr);

// Categorical sample from softmax(logits).
int sample_categorical(const Vector& logits, Rng& rng);

}  // namespace gfla
