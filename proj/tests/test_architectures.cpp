#include <algorithm>
#include <vector>

#include "doctest.h"
#include "gfla/architectures.hpp"
#include "gfla/errors.hpp"

using namespace gfla;

namespace {

constexpr int kNb = 1, kNs = 2, kM = 2, kP = 2;

LearnerSettings settings(int period = 5) {
  LearnerSettings s;
  s.dims = NetworkDims{feature_dim(kNb, kNs), 8, 2 * kM * kP * kNs, Activation::kRelu};
  s.ppo.epochs = 2;
  s.ppo.minibatches = 2;
  s.update_period = period;
  s.broadcast_period = period;
  return s;
}

ActionSpace space() { return ActionSpace(kM, kP, kNs); }

Observation obs(int queued, double gain = 1e-12) {
  Observation o;
  o.channel_gains.assign(kNb * kNs, gain);
  o.queued = queued;
  return o;
}

// Drives a controller with synthetic observations and cost terms.
void drive(Controller& c, int devices, int ttis, std::uint64_t seed) {
  Rng policy(seed), training(seed + 1);
  std::vector<Observation> o(devices);
  std::vector<Action> a(devices);
  std::vector<CostTerms> terms(devices);
  std::vector<DeviceFeedback> fb(devices);
  for (int t = 0; t < ttis; ++t) {
    for (int i = 0; i < devices; ++i) o[i] = obs((t + i) % 7, 1e-12 * (1 + i));
    c.act(o, a, policy);
    for (int i = 0; i < devices; ++i) {
      terms[i] = CostTerms{a[i].radio, 0.01 * a[i].power_index, 1.0, o[i].queued, 0};
      fb[i] = DeviceFeedback{a[i].radio == 1, false, a[i].radio, 0};
    }
    c.observe(StepOutcome{o, terms, fb}, training);
  }
}

std::vector<double> head_params(const WeightBundle& w, bool critic) {
  const auto v = w.view();
  std::vector<double> out;
  if (critic) {
    for (int k = 0; k < v.critic_weight().size(); ++k) out.push_back(v.critic_weight()(k));
    out.push_back(v.critic_bias()(0));
  } else {
    for (int k = 0; k < v.actor_weight().size(); ++k) out.push_back(v.actor_weight()(k));
    for (int k = 0; k < v.actor_bias().size(); ++k) out.push_back(v.actor_bias()(k));
  }
  return out;
}

}  // namespace

TEST_CASE("architecture names") {
  CHECK(parse_architecture("DACC") == ArchitectureKind::kCentralCritic);
  CHECK(parse_architecture("il") == ArchitectureKind::kIndependent);
  CHECK(to_string(ArchitectureKind::kCentralizedLearning) == "cldi");
  CHECK_THROWS_AS(parse_architecture("maddpg"), DomainError);
}

TEST_CASE("overhead report") {
  const auto d = overhead_report(ArchitectureKind::kCentralCritic, 0.01, 17793, 200);
  CHECK(d.uplink_bps == 1600.0);
  CHECK(d.downlink_bps == 1600.0);
  const auto il = overhead_report(ArchitectureKind::kIndependent, 0.01, 17793, 200);
  CHECK(il.uplink_bps == 0.0);
  CHECK(il.downlink_bps == 0.0);
  const auto c = overhead_report(ArchitectureKind::kCentralizedLearning, 0.01, 2562, 200);
  CHECK(c.uplink_bps == 1600.0);
  CHECK(c.downlink_bps == kReportedCldiDownlinkBps);
  CHECK(overhead_report(ArchitectureKind::kCentralizedLearning, 0.01, 17793, 200).downlink_bps ==
        doctest::Approx(142344.0));
  CHECK_THROWS(overhead_report(ArchitectureKind::kCentralizedLearning, 0.0, 10, 200));
}

TEST_CASE("baseline decisions") {
  BaselineLimits lim{5, 4, 8};
  Rng rng(1);
  BaselineState s;
  CHECK(baseline_step(s, obs(0), 4, lim, rng).radio == 0);

  s.q_bar = 0.0;  // every draw exceeds the threshold
  CHECK(baseline_step(s, obs(10), 4, lim, rng).radio == 0);

  s = BaselineState{};
  s.q_bar = 1.0;
  s.power_index = 2;
  const Action up = baseline_step(s, obs(12), 4, lim, rng);
  CHECK(up.radio == 1);
  CHECK(up.power_index == 3);
  s.power_index = 4;
  CHECK(baseline_step(s, obs(12), 4, lim, rng).power_index == 4);

  Observation dropped = obs(3);
  dropped.overflow = 1;
  s.power_index = 0;
  CHECK(baseline_step(s, dropped, 4, lim, rng).power_index == 1);

  // ACK raises the modulation and lowers power; NACK lowers modulation.
  s = BaselineState{};
  s.q_bar = 1.0;
  s.power_index = 2;
  baseline_feedback(s, DeviceFeedback{true, false, 1, 0});
  Action a = baseline_step(s, obs(2), 4, lim, rng);
  CHECK(a.modulation == 2);
  CHECK(a.power_index == 1);
  a = baseline_step(s, obs(2), 4, lim, rng);  // feedback consumed
  CHECK(a.modulation == 2);
  CHECK(a.power_index == 1);
  baseline_feedback(s, DeviceFeedback{true, true, 0, 1});
  CHECK(baseline_step(s, obs(2), 4, lim, rng).modulation == 1);
  baseline_feedback(s, DeviceFeedback{false, false, 0, 0});
  CHECK_FALSE(s.has_feedback);
}

TEST_CASE("baseline is memory-one") {
  BaselineLimits lim{5, 4, 8};
  BaselineState a, b;
  a.power_index = b.power_index = 3;
  a.modulation = b.modulation = 2;
  Rng r1(44), r2(44);
  for (int t = 0; t < 50; ++t) {
    const Observation o = obs(t % 9);
    CHECK(baseline_step(a, o, 8, lim, r1) == baseline_step(b, o, 8, lim, r2));
  }
  int hits = 0;
  for (int c = 0; c < 8; ++c) {
    Rng r(9);
    BaselineState s;
    s.q_bar = 1.0;
    for (int t = 0; t < 400; ++t) hits += baseline_step(s, obs(1), 8, lim, r).subcarrier == c;
  }
  CHECK(hits == 400);
  CHECK_THROWS_AS(BaselineController({4, 8}, lim, 1.5), DomainError);
}

TEST_CASE("independent learners exchange nothing") {
  Rng init(2);
  IndependentLearners il(3, space(), settings(), init);
  drive(il, 3, 12, 5);
  CHECK(il.traffic().uplink_bits == 0.0);
  CHECK(il.traffic().downlink_bits == 0.0);
  CHECK(il.updates() == 2);
  CHECK(il.agent(0).weights.checksum() != il.agent(1).weights.checksum());
}

TEST_CASE("learning can be switched off") {
  Rng init(2);
  auto s = settings();
  s.learning_enabled = false;
  IndependentLearners il(2, space(), s, init);
  const auto before = il.agent(0).weights.checksum();
  drive(il, 2, 12, 5);
  CHECK(il.updates() == 0);
  CHECK(il.agent(0).weights.checksum() == before);
}

TEST_CASE("central critic ownership is disjoint") {
  Rng init(3);
  CentralCritic dacc(2, space(), settings(), init);
  const WeightBundle actor0 = dacc.actor(0).weights;
  const WeightBundle critic0 = dacc.critic().weights;
  drive(dacc, 2, 5, 7);
  CHECK(dacc.updates() == 1);
  CHECK(head_params(dacc.actor(0).weights, true) == head_params(actor0, true));
  CHECK(head_params(dacc.actor(0).weights, false) != head_params(actor0, false));
  CHECK(head_params(dacc.critic().weights, false) == head_params(critic0, false));
  CHECK(head_params(dacc.critic().weights, true) != head_params(critic0, true));
  CHECK(dacc.traffic().uplink_bits == 16.0 * 2 * 5);
  CHECK(dacc.traffic().downlink_bits == 16.0 * 2 * 5);
  // Fed-back values travel as binary16.
  CHECK(from_half(to_half(dacc.last_feedback())) == dacc.last_feedback());
}

TEST_CASE("central critic tolerates a lost report") {
  Rng init(3);
  CentralCritic dacc(2, space(), settings(), init);
  drive(dacc, 2, 2, 7);
  const double held = dacc.last_feedback();
  dacc.drop_report_next_tti();
  drive(dacc, 2, 1, 8);
  CHECK(dacc.missed_reports() == 1);
  CHECK(dacc.last_feedback() == held);
  CHECK_NOTHROW(drive(dacc, 2, 9, 9));
}

TEST_CASE("centralized learner keeps devices in lockstep") {
  Rng init(4);
  CentralizedLearner cldi(3, space(), settings(), init);
  const auto deployed = cldi.device_weights().checksum();
  drive(cldi, 3, 4, 11);
  CHECK(cldi.pooled_experiences() == 12);
  CHECK(cldi.device_weights().checksum() == deployed);
  drive(cldi, 3, 1, 12);
  CHECK(cldi.updates() == 1);
  // After a broadcast the devices run the fp16 image of the edge weights.
  const auto image = deserialize_weights(serialize_weights(cldi.edge_weights()));
  CHECK(cldi.device_weights().checksum() == image.checksum());
  CHECK(cldi.device_weights().checksum() != deployed);
  CHECK(cldi.traffic().uplink_bits == 16.0 * 3 * 5);
  CHECK(cldi.traffic().downlink_bits ==
        16.0 * static_cast<double>(cldi.edge_weights().size()) * 3);
}

TEST_CASE("corrupt broadcast keeps previous weights") {
  Rng init(4);
  CentralizedLearner cldi(2, space(), settings(), init);
  const auto before = cldi.device_weights().checksum();
  auto bytes = serialize_weights(cldi.edge_weights());
  bytes.resize(bytes.size() - 3);
  CHECK_FALSE(cldi.apply_broadcast(bytes));
  CHECK(cldi.failed_broadcasts() == 1);
  CHECK(cldi.device_weights().checksum() == before);

  Rng other(5);
  auto s = settings();
  s.dims.hidden = 4;
  const auto wrong = serialize_weights(WeightBundle::random(s.dims, other));
  CHECK_FALSE(cldi.apply_broadcast(wrong));
  CHECK(cldi.device_weights().checksum() == before);
}

TEST_CASE("single-device centralized cost equals local cost") {
  CostParams p;
  const CostTerms t{1, 0.04, 3.0, 9, 1};
  const std::vector<CostTerms> one{t};
  CHECK(cldi_cost(one, p) == doctest::Approx(local_cost(t, p)));
  CHECK(global_cost(one, p) == doctest::Approx(local_cost(t, p)));
}
