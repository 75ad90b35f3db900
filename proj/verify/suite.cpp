#include <cmath>
#include <sstream>

#include "gfla/architectures.hpp"
#include "gfla/channel.hpp"
#include "gfla/mac.hpp"
#include "gfla/neural.hpp"
#include "gfla/posg.hpp"
#include "gfla/ppo.hpp"
#include "oracles.hpp"

namespace gfla::oracle {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

Check near(const std::string& name, double got, double want, double tol) {
  return {name, std::fabs(got - want) <= tol,
          "got " + fmt(got) + ", want " + fmt(want) + " +- " + fmt(tol)};
}

Check exact(const std::string& name, double got, double want) {
  return {name, got == want, "got " + fmt(got) + ", want " + fmt(want)};
}

}  // namespace

std::vector<Check> formula_checks() {
  std::vector<Check> c;
  c.push_back(exact("mu(0.99)", mu(0.99), 99.0));
  c.push_back(exact("mu(0.5)", mu(0.5), 1.0));
  c.push_back(exact("mu(0.9)", mu(0.9), 9.0));
  const double kappa = correlation_coefficient(10.0, 0.01);
  c.push_back(near("kappa(10 Hz, 10 ms) vs 0.90375", kappa, 0.90375, 1e-4));
  c.push_back(near("kappa vs series J0", kappa, series_j0(2.0 * std::numbers::pi * 0.1), 1e-9));
  c.push_back(near("J0(0)", bessel_j0(0.0), 1.0, 1e-12));
  c.push_back(near("J0 first zero", bessel_j0(series_j0_first_zero()), 0.0, 1e-9));
  c.push_back(near("J0(2.40483)", bessel_j0(2.40483), 0.0, 1e-4));
  for (double x : {0.3, 1.7, 4.2, 7.9, 9.99})
    c.push_back(near("J0 vs series at " + fmt(x), bessel_j0(x), series_j0(x), 1e-9));
  c.push_back(near("packet_loss(0.001, 800) = 1 - 0.999^800", packet_loss_prob(0.001, 800),
                   0.5508508, 1e-6));
  c.push_back(near("packet_loss vs product oracle", packet_loss_prob(0.001, 800),
                   packet_loss(0.001, 800), 1e-12));
  c.push_back(near("BER(SINR=1, beta=1)", bit_error_prob_from_sinr(1.0, 1, 4), 0.07865, 1e-5));
  c.push_back(near("BER(SINR=4, beta=2)", bit_error_prob_from_sinr(4.0, 2, 4), 0.00936, 1e-5));
  for (double s : {0.01, 0.5, 2.0, 9.0, 30.0})
    for (int b = 1; b <= 4; ++b)
      c.push_back(near("BER vs erfc oracle SINR=" + fmt(s) + " beta=" + std::to_string(b),
                       bit_error_prob_from_sinr(s, b, 4), qam_ber(s, b), 1e-12));

  ContentionConfig cc;
  c.push_back(exact("cw_min(4)", cw_min(4, cc), 8));
  c.push_back(exact("cw_min(3)", cw_min(3, cc), 16));
  c.push_back(exact("cw_min(2)", cw_min(2, cc), 32));
  c.push_back(exact("cw_min(1)", cw_min(1, cc), 64));
  ContentionConfig half = cc;
  half.a = 8.5;
  c.push_back(exact("cw_min(3, A=8.5)", cw_min(3, half), 17));
  c.push_back(exact("cw_max", cc.cw_max(), 128));
  PacketTiming pt;
  c.push_back(exact("packets(4, 9 ms)", packets_per_tti(4, 0.009, pt), 4));
  c.push_back(exact("packets(1, 8 ms)", packets_per_tti(1, 0.008, pt), 1));
  c.push_back(exact("packets(1, 7.9 ms)", packets_per_tti(1, 0.0079, pt), 0));
  c.push_back(exact("packets(2, 10 ms)", packets_per_tti(2, 0.010, pt), 2));
  c.push_back(exact("packets(3, 8 ms)", packets_per_tti(3, 0.008, pt), 3));
  c.push_back(exact("packets(4, 5 ms)", packets_per_tti(4, 0.005, pt), 2));
  return c;
}

std::vector<Check> fading_checks(int steps) {
  const double kappa = correlation_coefficient(10.0, 0.01);
  const Ar1Stats s = ar1_statistics(20240601, kappa, steps);
  return {near("AR(1) lag-1 autocorrelation", s.lag1, kappa, 0.01),
          near("AR(1) unit variance", s.variance, 1.0, 0.02)};
}

std::vector<Check> gradient_checks(int seeds) {
  std::vector<Check> c;
  for (int s = 1; s <= seeds; ++s) {
    const GradientCheck g = gradient_check(1000 + s);
    c.push_back({"finite differences seed " + std::to_string(s), g.max_relative_error < 1e-4,
                 "max relative error " + fmt(g.max_relative_error) + " over " +
                     std::to_string(g.parameters) + " parameters"});
  }
  return c;
}

std::vector<Check> ppo_checks() {
  std::vector<Check> c;
  c.push_back(exact("surrogate ratio 1", clipped_surrogate(0.3, 0.3, 2.5, 0.2), 2.5));
  c.push_back(exact("surrogate ratio 1.5, A=1", clipped_surrogate(std::log(1.5), 0.0, 1.0, 0.2),
                    1.2));
  c.push_back(exact("surrogate ratio 0.5, A=-1",
                    clipped_surrogate(std::log(0.5), 0.0, -1.0, 0.2), -0.8));

  RolloutBuffer three(3);
  for (int i = 0; i < 3; ++i) {
    Experience e;
    e.cost = 1.0;
    three.push(e);
  }
  const auto ra = compute_returns_and_advantages(three, 0.5, 0.0);
  c.push_back({"returns (-1.75, -1.5, -1)",
               ra.returns[0] == -1.75 && ra.returns[1] == -1.5 && ra.returns[2] == -1.0,
               "got " + fmt(ra.returns[0]) + ", " + fmt(ra.returns[1]) + ", " +
                   fmt(ra.returns[2])});

  // Zero advantages, V equal to the returns and no entropy bonus.
  NetworkDims d{6, 8, 10, Activation::kRelu};
  Rng rng(7);
  WeightBundle w = WeightBundle::random(d, rng);
  {
    auto v = w.mutable_view();
    v.critic_weight().setZero();
    v.critic_bias().setZero();
  }
  RolloutBuffer buf(20);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Experience e;
    e.features.resize(6);
    for (auto& f : e.features) f = u(rng);
    e.next_features = e.features;
    e.hidden = Vector::Zero(8);
    e.action = t % 10;
    e.cost = 0.0;
    e.value = 0.0;
    e.log_prob = -std::log(10.0);
    buf.push(e);
  }
  RolloutBuffer copy = buf;
  PpoHyperparams hp;
  hp.entropy_coef = 0.0;
  AdamState adam(w.size());
  const WeightBundle before = w;
  Rng train(11);
  const auto stats = ppo_update(std::span<RolloutBuffer>(&buf, 1), w, adam, hp, train);
  double drift = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    drift = std::max(drift, std::fabs(w.values()[i] - before.values()[i]));
  c.push_back({"zero-gradient fixed point", drift <= 1e-9, "max weight change " + fmt(drift)});
  c.push_back({"buffer cleared after update", buf.empty(), ""});

  // A real update moves the weights while the snapshot stays frozen.
  for (int t = 0; t < copy.size(); ++t) const_cast<Experience&>(copy[t]).cost = (t % 3) - 1.0;
  AdamState adam2(w.size());
  WeightBundle w2 = before;
  const auto s2 = ppo_update(std::span<RolloutBuffer>(&copy, 1), w2, adam2, PpoHyperparams{}, train);
  c.push_back({"old policy frozen across epochs",
               s2.old_policy_checksum_before == s2.old_policy_checksum_after &&
                   s2.old_policy_checksum_before == before.checksum() &&
                   w2.checksum() != before.checksum() && s2.optimizer_steps == 40,
               std::to_string(s2.optimizer_steps) + " optimizer steps"});
  (void)stats;

  // Uniform policy entropy.
  WeightBundle zero(d);
  SurrogateBatch b;
  b.features = Matrix::Ones(6, 2);
  b.hidden = Matrix::Zero(8, 2);
  b.actions = {0, 1};
  b.old_log_probs = {-std::log(10.0), -std::log(10.0)};
  b.advantages = {1.0, -1.0};
  b.value_targets = {0.0, 0.0};
  const auto sr = surrogate_objective(b, zero, PpoHyperparams{});
  c.push_back(near("uniform policy entropy ln K", sr.entropy, std::log(10.0), 1e-12));

  // Single positive-advantage sample: the taken action becomes likelier.
  WeightBundle w3 = WeightBundle::random(d, rng);
  RolloutBuffer one(1);
  Experience e;
  e.features = {0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  e.next_features = e.features;
  e.hidden = Vector::Zero(8);
  e.action = 3;
  e.cost = -1.0;
  e.value = 0.0;
  e.log_prob = log_softmax(forward(w3, e.hidden, e.features).logits)(3);
  one.push(e);
  const double p_before = std::exp(e.log_prob);
  AdamState adam3(w3.size());
  ppo_update(std::span<RolloutBuffer>(&one, 1), w3, adam3, PpoHyperparams{}, train);
  const double p_after =
      std::exp(log_softmax(forward(w3, Vector::Zero(8), e.features).logits)(3));
  c.push_back({"positive advantage raises action probability", p_after > p_before,
               fmt(p_before) + " -> " + fmt(p_after)});
  return c;
}

std::vector<Check> overhead_checks() {
  std::vector<Check> c;
  const auto dacc = overhead_report(ArchitectureKind::kCentralCritic, 0.01, 0, 200);
  c.push_back({"DACC overhead 1600/1600 bit/s",
               dacc.uplink_bps == 1600.0 && dacc.downlink_bps == 1600.0,
               fmt(dacc.uplink_bps) + " / " + fmt(dacc.downlink_bps)});
  const auto il = overhead_report(ArchitectureKind::kIndependent, 0.01, 17793, 200);
  c.push_back({"IL overhead 0/0", il.uplink_bps == 0.0 && il.downlink_bps == 0.0, ""});
  const long w = count_weights(2, 8, 4, 5, WeightConvention::kBiasEverywhere).total();
  const auto cldi = overhead_report(ArchitectureKind::kCentralizedLearning, 0.01, w, 200);
  c.push_back({"CLDI downlink 16 W / 2", cldi.downlink_bps == 16.0 * w / 2.0,
               fmt(cldi.downlink_bps) + " bit/s with W=" + std::to_string(w) +
                   " (reported figure " + fmt(kReportedCldiDownlinkBps) + ")"});
  const auto back = overhead_report(ArchitectureKind::kCentralizedLearning, 0.01, 2562, 200);
  c.push_back(exact("CLDI downlink with W=2562", back.downlink_bps, 20496.0));
  c.push_back(exact("CLDI uplink", cldi.uplink_bps, 1600.0));
  return c;
}

std::vector<Check> serialization_checks() {
  std::vector<Check> c;
  const auto wc = count_weights(2, 8, 4, 5, WeightConvention::kBiasEverywhere);
  c.push_back(exact("GRU weights", wc.gru, 5088));
  c.push_back(exact("fully connected weights", wc.fully_connected, 2112));
  c.push_back(exact("actor head weights", wc.actor_head, 10560));
  c.push_back(exact("critic head weights", wc.critic_head, 33));
  const auto pt = count_weights(2, 8, 4, 5, WeightConvention::kWeightsOnly);
  c.push_back(exact("weights-only actor head", pt.actor_head, 32 * 320));

  NetworkDims d{20, 32, 320, Activation::kRelu};
  c.push_back(exact("parameter_count matches count_weights",
                    static_cast<double>(parameter_count(d)), static_cast<double>(wc.total())));
  Rng rng(3);
  const WeightBundle w = WeightBundle::random(d, rng);
  const auto bytes = serialize_weights(w);
  c.push_back(exact("byte length", static_cast<double>(bytes.size()), 16.0 + 2.0 * wc.total()));
  const WeightBundle back = deserialize_weights(bytes);
  bool within = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double v = w.values()[i];
    const std::uint16_t h =
        static_cast<std::uint16_t>(bytes[16 + 2 * i] | (bytes[17 + 2 * i] << 8));
    const double decoded = half_to_double(h);
    const double ulp = std::ldexp(1.0, std::max(std::ilogb(v), -14) - 10);
    if (decoded != back.values()[i] || std::fabs(decoded - v) > 0.5 * ulp) within = false;
  }
  c.push_back({"fp16 round trip within half an ULP", within, ""});
  return c;
}

std::vector<Check> full_suite() {
  std::vector<Check> all;
  for (auto group : {formula_checks(), fading_checks(), gradient_checks(), ppo_checks(),
                     overhead_checks(), serialization_checks()})
    all.insert(all.end(), group.begin(), group.end());
  return all;
}

}  // namespace gfla::oracle
