#include "gfla/architectures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>

#include "gfla/errors.hpp"

namespace gfla {

namespace {

constexpr double kReportBits = 16.0;
constexpr double kHalfMax = 65504.0;

double half_round(double v) { return from_half(to_half(std::clamp(v, -kHalfMax, kHalfMax))); }

LearnerAgent make_agent(const LearnerSettings& s, Rng& rng) {
  LearnerAgent a{WeightBundle::random(s.dims, rng), AdamState(parameter_count(s.dims)),
                 RolloutBuffer(s.update_period), ReturnScaler{},
                 Vector::Zero(s.dims.hidden), Experience{}};
  return a;
}

struct Sampled {
  int action;
  double log_prob;
};

Sampled sample_action(const Eigen::Ref<const Vector>& logits, Rng& rng) {
  const Vector lp = log_softmax(logits);
  const int a = sample_categorical(logits, rng);
  return {a, lp(a)};
}

}  // namespace

std::string to_string(ArchitectureKind kind) {
  switch (kind) {
    case ArchitectureKind::kIndependent: return "il";
    case ArchitectureKind::kCentralCritic: return "dacc";
    case ArchitectureKind::kCentralizedLearning: return "cldi";
    case ArchitectureKind::kBaseline: return "baseline";
  }
  return "unknown";
}

ArchitectureKind parse_architecture(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "il") return ArchitectureKind::kIndependent;
  if (s == "dacc") return ArchitectureKind::kCentralCritic;
  if (s == "cldi") return ArchitectureKind::kCentralizedLearning;
  if (s == "baseline") return ArchitectureKind::kBaseline;
  throw DomainError("unknown architecture '" + name + "'");
}

OverheadReport overhead_report(ArchitectureKind kind, double tti_s, long weight_count,
                               int broadcast_period) {
  if (!(tti_s > 0.0)) throw DomainError("overhead_report: TTI must be positive");
  switch (kind) {
    case ArchitectureKind::kIndependent:
    case ArchitectureKind::kBaseline:
      return {};
    case ArchitectureKind::kCentralCritic:
      return {kReportBits / tti_s, kReportBits / tti_s};
    case ArchitectureKind::kCentralizedLearning:
      if (broadcast_period < 1) throw DomainError("overhead_report: broadcast period < 1");
      if (weight_count < 0) throw DomainError("overhead_report: negative weight count");
      return {kReportBits / tti_s,
              kReportBits * static_cast<double>(weight_count) / (broadcast_period * tti_s)};
  }
  return {};
}

// ---------------------------------------------------------------- IL

IndependentLearners::IndependentLearners(int num_devices, const ActionSpace& space,
                                         const LearnerSettings& settings, Rng& init_rng)
    : space_(space), settings_(settings) {
  settings_.ppo.policy_terms = true;
  settings_.ppo.value_terms = true;
  agents_.reserve(num_devices);
  for (int i = 0; i < num_devices; ++i) agents_.push_back(make_agent(settings_, init_rng));
}

void IndependentLearners::act(std::span<const Observation> observations,
                              std::span<Action> actions, Rng& policy_rng) {
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    auto& ag = agents_[i];
    auto f = encode_features(observations[i], settings_.scaling);
    const ForwardOutput out = forward(ag.weights, ag.hidden, f);
    const Sampled s = sample_action(out.logits, policy_rng);
    ag.pending.features = std::move(f);
    ag.pending.hidden = ag.hidden;
    ag.pending.action = s.action;
    ag.pending.log_prob = s.log_prob;
    ag.pending.value = out.value * ag.scaler.scale();
    ag.hidden = out.hidden;
    actions[i] = space_.decode(s.action);
  }
}

void IndependentLearners::observe(const StepOutcome& outcome, Rng& training_rng) {
  if (!settings_.learning_enabled) return;
  bool trained = false;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    auto& ag = agents_[i];
    ag.pending.cost = local_cost(outcome.cost_terms[i], settings_.cost);
    ag.pending.next_features = encode_features(outcome.next_observations[i], settings_.scaling);
    ag.buffer.push(std::move(ag.pending));
    ag.pending = Experience{};
    if (!ag.buffer.full()) continue;
    const auto& last = ag.buffer.items().back();
    ag.buffer.bootstrap_value =
        forward(ag.weights, ag.hidden, last.next_features).value * ag.scaler.scale();
    ppo_update(std::span<RolloutBuffer>(&ag.buffer, 1), ag.weights, ag.adam, settings_.ppo,
               training_rng, &ag.scaler);
    trained = true;
  }
  if (trained) ++updates_;
}

// ---------------------------------------------------------------- DACC

CentralCritic::CentralCritic(int num_devices, const ActionSpace& space,
                             const LearnerSettings& settings, Rng& init_rng)
    : space_(space), settings_(settings) {
  actors_.reserve(num_devices);
  for (int i = 0; i < num_devices; ++i) actors_.push_back(make_agent(settings_, init_rng));
  critic_ = make_agent(settings_, init_rng);
}

std::vector<double> CentralCritic::pooled_features(
    std::span<const Observation> observations) const {
  const int dim = settings_.dims.input_dim;
  std::vector<double> pooled(dim, 0.0), f(dim);
  for (const auto& o : observations) {
    encode_features(o, settings_.scaling, f);
    for (int k = 0; k < dim; ++k) pooled[k] += f[k];
  }
  for (double& v : pooled) v /= static_cast<double>(observations.size());
  return pooled;
}

double CentralCritic::edge_value(const std::vector<double>& features, Vector* hidden_out) const {
  const ForwardOutput out = forward(critic_.weights, critic_.hidden, features);
  if (hidden_out) *hidden_out = out.hidden;
  return out.value * critic_.scaler.scale();
}

void CentralCritic::act(std::span<const Observation> observations, std::span<Action> actions,
                        Rng& policy_rng) {
  const double n = static_cast<double>(actors_.size());
  skip_edge_record_ = report_missing_;
  if (report_missing_) {
    // Without every report the edge cannot form the global state; devices
    // keep the last value they were sent.
    ++missed_reports_;
    report_missing_ = false;
  } else {
    auto g = pooled_features(observations);
    Vector next_hidden;
    const double v = edge_value(g, &next_hidden);
    critic_.pending.features = std::move(g);
    critic_.pending.hidden = critic_.hidden;
    critic_.pending.action = 0;
    critic_.pending.log_prob = 0.0;
    critic_.pending.value = v;
    critic_.hidden = next_hidden;
    fed_value_ = half_round(v / n);
  }
  traffic_.uplink_bits += kReportBits * n;
  traffic_.downlink_bits += kReportBits * n;

  for (std::size_t i = 0; i < actors_.size(); ++i) {
    auto& ag = actors_[i];
    auto f = encode_features(observations[i], settings_.scaling);
    const ForwardOutput out = forward(ag.weights, ag.hidden, f);
    const Sampled s = sample_action(out.logits, policy_rng);
    ag.pending.features = std::move(f);
    ag.pending.hidden = ag.hidden;
    ag.pending.action = s.action;
    ag.pending.log_prob = s.log_prob;
    ag.pending.value = fed_value_;
    ag.hidden = out.hidden;
    actions[i] = space_.decode(s.action);
  }
}

void CentralCritic::observe(const StepOutcome& outcome, Rng& training_rng) {
  if (!settings_.learning_enabled) return;
  const double n = static_cast<double>(actors_.size());
  bool trained = false;

  // Edge critic: global cost, value term only.
  if (!skip_edge_record_) {
    critic_.pending.cost = global_cost(outcome.cost_terms, settings_.cost);
    critic_.pending.next_features = pooled_features(outcome.next_observations);
    critic_.buffer.push(std::move(critic_.pending));
    critic_.pending = Experience{};
  }
  double next_feedback = fed_value_;
  const bool actors_full = actors_.front().buffer.size() + 1 == actors_.front().buffer.capacity();
  if (actors_full || critic_.buffer.full()) {
    const auto g = pooled_features(outcome.next_observations);
    const double v_next = edge_value(g, nullptr);
    next_feedback = half_round(v_next / n);
    if (critic_.buffer.full()) {
      critic_.buffer.bootstrap_value = v_next;
      PpoHyperparams h = settings_.ppo;
      h.policy_terms = false;
      h.value_terms = true;
      ppo_update(std::span<RolloutBuffer>(&critic_.buffer, 1), critic_.weights, critic_.adam, h,
                 training_rng, &critic_.scaler);
      trained = true;
    }
  }

  PpoHyperparams h = settings_.ppo;
  h.policy_terms = true;
  h.value_terms = false;
  for (std::size_t i = 0; i < actors_.size(); ++i) {
    auto& ag = actors_[i];
    ag.pending.cost = local_cost(outcome.cost_terms[i], settings_.cost);
    ag.pending.next_features = encode_features(outcome.next_observations[i], settings_.scaling);
    ag.buffer.push(std::move(ag.pending));
    ag.pending = Experience{};
    if (!ag.buffer.full()) continue;
    ag.buffer.bootstrap_value = next_feedback;
    ppo_update(std::span<RolloutBuffer>(&ag.buffer, 1), ag.weights, ag.adam, h, training_rng);
    trained = true;
  }
  if (trained) ++updates_;
}

// ---------------------------------------------------------------- CLDI

CentralizedLearner::CentralizedLearner(int num_devices, const ActionSpace& space,
                                       const LearnerSettings& settings, Rng& init_rng)
    : space_(space),
      settings_(settings),
      edge_(WeightBundle::random(settings.dims, init_rng)),
      adam_(parameter_count(settings.dims)),
      streams_(num_devices, RolloutBuffer(settings.update_period)),
      hidden_(Matrix::Zero(settings.dims.hidden, num_devices)),
      pending_(num_devices) {
  settings_.ppo.policy_terms = true;
  settings_.ppo.value_terms = true;
  const auto bytes = serialize_weights(edge_);
  deployed_ = deserialize_weights(bytes, settings_.dims.fc_activation);
}

int CentralizedLearner::pooled_experiences() const {
  int n = 0;
  for (const auto& s : streams_) n += s.size();
  return n;
}

bool CentralizedLearner::apply_broadcast(std::span<const std::uint8_t> bytes) {
  try {
    WeightBundle w = deserialize_weights(bytes, settings_.dims.fc_activation);
    if (!(w.dims() == deployed_.dims())) throw DecodeError("weight broadcast: shape mismatch");
    deployed_ = std::move(w);
    return true;
  } catch (const DecodeError& e) {
    ++failed_broadcasts_;
    std::clog << "cldi: keeping previous weights (" << e.what() << ")\n";
    return false;
  }
}

void CentralizedLearner::broadcast() {
  const auto bytes = serialize_weights(edge_);
  apply_broadcast(bytes);
  traffic_.downlink_bits +=
      kReportBits * static_cast<double>(edge_.size()) * static_cast<double>(streams_.size());
}

void CentralizedLearner::act(std::span<const Observation> observations,
                             std::span<Action> actions, Rng& policy_rng) {
  const auto n = static_cast<Eigen::Index>(streams_.size());
  const int dim = settings_.dims.input_dim;
  Matrix x(dim, n);
  for (Eigen::Index i = 0; i < n; ++i)
    encode_features(observations[i], settings_.scaling, std::span<double>(x.col(i).data(), dim));
  const StepCache c = forward_step(deployed_, hidden_, x);
  const double scale = scaler_.scale();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sampled s = sample_action(c.logits.col(i), policy_rng);
    auto& p = pending_[i];
    p.features.assign(x.col(i).data(), x.col(i).data() + dim);
    p.hidden = hidden_.col(i);
    p.action = s.action;
    p.log_prob = s.log_prob;
    p.value = c.value(i) * scale;
    actions[i] = space_.decode(s.action);
  }
  hidden_ = c.h;
  traffic_.uplink_bits += kReportBits * static_cast<double>(n);
}

void CentralizedLearner::observe(const StepOutcome& outcome, Rng& training_rng) {
  ++ttis_;
  if (settings_.learning_enabled) {
    const double cost = cldi_cost(outcome.cost_terms, settings_.cost);
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      auto& p = pending_[i];
      p.cost = cost;
      p.next_features = encode_features(outcome.next_observations[i], settings_.scaling);
      streams_[i].push(std::move(p));
      p = Experience{};
    }
    if (streams_.front().full()) {
      const auto n = static_cast<Eigen::Index>(streams_.size());
      const int dim = settings_.dims.input_dim;
      Matrix x(dim, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& f = streams_[i].items().back().next_features;
        x.col(i) = Eigen::Map<const Vector>(f.data(), dim);
      }
      const StepCache c = forward_step(deployed_, hidden_, x);
      const double scale = scaler_.scale();
      for (Eigen::Index i = 0; i < n; ++i) streams_[i].bootstrap_value = c.value(i) * scale;
      ppo_update(streams_, edge_, adam_, settings_.ppo, training_rng, &scaler_);
      ++updates_;
    }
  }
  if (ttis_ % settings_.broadcast_period == 0) broadcast();
}

// ---------------------------------------------------------------- baseline

Action baseline_step(BaselineState& state, const Observation& o, int delay_constraint,
                     const BaselineLimits& limits, Rng& rng) {
  Action a{0, state.modulation, state.power_index, 0};
  if (o.queued == 0) return a;
  if (uniform01(rng) > state.q_bar) return a;
  const bool violated = o.queued > delay_constraint;
  const bool dropped = o.overflow > 0;
  if (violated || dropped) {
    state.power_index = std::min(state.power_index + 1, limits.num_powers - 1);
  } else if (state.has_feedback && state.last_success) {
    state.power_index = std::max(state.power_index - 1, 0);
  }
  if (state.has_feedback) {
    state.modulation = state.last_success ? std::min(state.modulation + 1, limits.max_modulation)
                                          : std::max(state.modulation - 1, 1);
    state.has_feedback = false;
  }
  a.radio = 1;
  a.modulation = state.modulation;
  a.power_index = state.power_index;
  a.subcarrier =
      std::uniform_int_distribution<int>(0, limits.num_subcarriers - 1)(rng);
  return a;
}

void baseline_feedback(BaselineState& state, const DeviceFeedback& fb) {
  if (!fb.transmitted) return;
  state.has_feedback = true;
  state.last_success = fb.acks > 0;
}

BaselineController::BaselineController(std::vector<int> delay_constraints,
                                       const BaselineLimits& limits, double q_bar)
    : delay_constraints_(std::move(delay_constraints)), limits_(limits) {
  if (!(q_bar >= 0.0 && q_bar <= 1.0)) throw DomainError("baseline: q_bar outside [0, 1]");
  BaselineState init;
  init.q_bar = q_bar;
  states_.assign(delay_constraints_.size(), init);
}

void BaselineController::act(std::span<const Observation> observations,
                             std::span<Action> actions, Rng& policy_rng) {
  for (std::size_t i = 0; i < states_.size(); ++i)
    actions[i] = baseline_step(states_[i], observations[i], delay_constraints_[i], limits_,
                               policy_rng);
}

void BaselineController::observe(const StepOutcome& outcome, Rng&) {
  for (std::size_t i = 0; i < states_.size(); ++i) baseline_feedback(states_[i], outcome.feedback[i]);
}

}  // namespace gfla
