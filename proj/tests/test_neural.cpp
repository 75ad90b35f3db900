#include <cmath>
#include <limits>

#include "doctest.h"
#include "gfla/errors.hpp"
#include "gfla/neural.hpp"
#include "oracles.hpp"

using namespace gfla;

namespace {

NetworkDims small_dims() { return NetworkDims{6, 8, 10, Activation::kRelu}; }

}  // namespace

TEST_CASE("zero network gives a uniform policy") {
  WeightBundle w(small_dims());
  const auto out = forward(w, Vector::Zero(8), std::vector<double>(6, 0.7));
  CHECK(out.logits.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.value == 0.0);
  const Vector lp = log_softmax(out.logits);
  CHECK(lp(0) == doctest::Approx(-std::log(10.0)));
}

TEST_CASE("forward is deterministic and validates input") {
  Rng rng(3);
  const auto w = WeightBundle::random(small_dims(), rng);
  const std::vector<double> x{0.1, -0.4, 2.0, 0.0, 1.5, -1.0};
  const Vector h = Vector::Constant(8, 0.2);
  const auto a = forward(w, h, x);
  const auto b = forward(w, h, x);
  CHECK(a.logits == b.logits);
  CHECK(a.value == b.value);
  CHECK(a.hidden == b.hidden);
  CHECK(a.hidden.cwiseAbs().maxCoeff() < 1.0);
  std::vector<double> bad = x;
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(w, h, bad), NumericalError);
  CHECK_THROWS(forward(w, h, std::vector<double>(5, 0.0)));
}

TEST_CASE("input perturbation is bounded by a Lipschitz estimate") {
  Rng rng(17);
  const auto w = WeightBundle::random(small_dims(), rng);
  const auto v = w.view();
  // Gates have slope <= 1/4, tanh and ReLU <= 1; bound via operator norms.
  auto op = [](const auto& m) { return Matrix(m).operatorNorm(); };
  double lz = 0.25 * op(v.gate_input(0)), lr = 0.25 * op(v.gate_input(1));
  double ln = op(v.gate_input(2));
  // h = (1 - z) n + z h0 with |n|, |h0| <= 1 (h0 = 0 here).
  const double lh = lz * 2.0 + ln;
  (void)lr;
  const double lfc = op(v.fc_weight(0)) * op(v.fc_weight(1));
  const double l_logits = op(v.actor_weight()) * lfc * lh;
  const std::vector<double> x{0.3, -0.2, 0.5, 0.9, -0.7, 0.1};
  const auto base = forward(w, Vector::Zero(8), x);
  for (double eps : {1e-3, 1e-2, 1e-1}) {
    std::vector<double> y = x;
    for (double& t : y) t += eps;
    const auto moved = forward(w, Vector::Zero(8), y);
    CHECK((moved.logits - base.logits).norm() <= l_logits * eps * std::sqrt(6.0) + 1e-12);
  }
}

TEST_CASE("gradients match finite differences") {
  for (int seed = 1; seed <= 10; ++seed) {
    const auto g = oracle::gradient_check(500 + seed);
    CHECK(g.max_relative_error < 1e-4);
  }
}

TEST_CASE("constant loss has zero gradient and d_h0 flows") {
  Rng rng(2);
  const auto w = WeightBundle::random(small_dims(), rng);
  std::vector<Matrix> in{Matrix::Random(6, 3), Matrix::Random(6, 3)};
  const auto caches = forward_sequence(w, Matrix::Zero(8, 3), in);
  std::vector<Matrix> dl{Matrix::Zero(10, 3), Matrix::Zero(10, 3)};
  std::vector<Eigen::RowVectorXd> dv{Eigen::RowVectorXd::Zero(3), Eigen::RowVectorXd::Zero(3)};
  const auto r = backward(w, caches, dl, dv);
  CHECK(r.grads.norm() == 0.0);
  CHECK(r.d_h0.norm() == 0.0);
  dv[1].setOnes();
  CHECK(backward(w, caches, dl, dv).d_h0.norm() > 0.0);
  dl.pop_back();
  CHECK_THROWS(backward(w, caches, dl, dv));
}

TEST_CASE("critic bias gradient is the analytic derivative") {
  Rng rng(4);
  const auto w = WeightBundle::random(small_dims(), rng);
  std::vector<Matrix> in{Matrix::Random(6, 2)};
  const auto caches = forward_sequence(w, Matrix::Zero(8, 2), in);
  std::vector<Matrix> dl{Matrix::Zero(10, 2)};
  std::vector<Eigen::RowVectorXd> dv{Eigen::RowVectorXd::Constant(2, 1.5)};
  const auto r = backward(w, caches, dl, dv);
  CHECK(r.grads.view().critic_bias()(0) == doctest::Approx(3.0));
  CHECK(r.grads.view().actor_bias().norm() == 0.0);
}

TEST_CASE("Adam") {
  NetworkDims d{2, 2, 2, Activation::kRelu};
  WeightBundle w(d);
  AdamState s(w.size());
  Gradients g(d);
  adam_step(w, g, s, 1e-3);
  CHECK(w.norm() == 0.0);
  CHECK(s.step == 1);

  for (double& v : g.values()) v = 0.37;
  const WeightBundle before = w;
  adam_step(w, g, s, 0.0);
  CHECK(w.checksum() == before.checksum());

  WeightBundle w2(d);
  AdamState s2(w2.size());
  for (int t = 0; t < 2000; ++t) adam_step(w2, g, s2, 1e-3);
  // Fixed gradient: each step moves by about -lr.
  for (double v : w2.values()) CHECK(v == doctest::Approx(-2.0).epsilon(1e-3));
  const double prev = w2.values()[0];
  adam_step(w2, g, s2, 1e-3);
  CHECK(prev - w2.values()[0] == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("gradient clipping") {
  NetworkDims d{2, 2, 2, Activation::kRelu};
  Gradients g(d);
  CHECK(clip_gradients(g, 0.5) == 0.0);
  CHECK(g.norm() == 0.0);
  g.values()[0] = 0.3;
  clip_gradients(g, 0.5);
  CHECK(g.values()[0] == 0.3);
  g.values()[0] = 3.0;
  g.values()[1] = 4.0;
  const Gradients before = g;
  CHECK(clip_gradients(g, 0.5) == doctest::Approx(5.0));
  CHECK(g.norm() == doctest::Approx(0.5));
  CHECK(g.values()[0] == doctest::Approx(0.3));
  double dot = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) dot += g.values()[i] * before.values()[i];
  CHECK(dot / (g.norm() * before.norm()) == doctest::Approx(1.0));
}

TEST_CASE("binary16 conversion") {
  CHECK(to_half(0.0) == 0x0000);
  CHECK(to_half(-0.0) == 0x8000);
  CHECK(to_half(1.0) == 0x3C00);
  CHECK(to_half(-2.0) == 0xC000);
  CHECK(to_half(65504.0) == 0x7BFF);
  CHECK(to_half(1e6) == 0x7C00);
  CHECK(to_half(std::pow(2.0, -24)) == 0x0001);
  CHECK(to_half(1.0 + std::pow(2.0, -11)) == 0x3C00);  // tie to even
  CHECK(to_half(1.0 + 3 * std::pow(2.0, -11)) == 0x3C02);
  CHECK(std::isnan(from_half(to_half(NAN))));
  for (std::uint32_t h = 0; h < 0x10000; ++h) {
    const auto hh = static_cast<std::uint16_t>(h);
    const double v = from_half(hh);
    const double o = oracle::half_to_double(hh);
    if (std::isnan(o)) {
      CHECK(std::isnan(v));
    } else {
      REQUIRE(v == o);
      REQUIRE(to_half(v) == hh);
    }
  }
}

TEST_CASE("weight serialization") {
  Rng rng(8);
  NetworkDims d{20, 32, 320, Activation::kRelu};
  const auto w = WeightBundle::random(d, rng);
  const auto bytes = serialize_weights(w);
  CHECK(bytes.size() == 16 + 2 * 17793u);
  CHECK(bytes[0] == 'G');
  CHECK(bytes[3] == 'W');
  const auto back = deserialize_weights(bytes);
  CHECK(back.dims() == d);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double v = w.values()[i];
    const double ulp = std::ldexp(1.0, std::max(std::ilogb(v), -14) - 10);
    REQUIRE(std::fabs(back.values()[i] - v) <= 0.5 * ulp);
  }
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(deserialize_weights(truncated), DecodeError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_weights(magic), DecodeError);
  CHECK_THROWS_AS(deserialize_weights(std::vector<std::uint8_t>(4, 0)), DecodeError);
}

TEST_CASE("parameter counts") {
  const auto c = count_weights(2, 8, 4, 5, WeightConvention::kBiasEverywhere);
  CHECK(c.gru == 5088);
  CHECK(c.fully_connected == 2112);
  CHECK(c.actor_head == 10560);
  CHECK(c.critic_head == 33);
  const auto p = count_weights(2, 8, 4, 5, WeightConvention::kWeightsOnly);
  CHECK(p.fully_connected == 2048);
  CHECK(p.actor_head == 10240);
  CHECK(p.critic_head == 32);

  // Shape walk over the typed views.
  Rng rng(30);
  for (int trial = 0; trial < 5; ++trial) {
    const int nb = 1 + trial % 3, ns = 2 + 3 * trial, m = 1 + trial % 4, np = 2 + trial;
    NetworkDims d{nb * ns + 4, 32, 2 * m * np * ns, Activation::kRelu};
    WeightBundle w(d);
    const auto v = w.view();
    long walk = 0;
    for (int g = 0; g < 3; ++g)
      walk += v.gate_input(g).size() + v.gate_recurrent(g).size() + v.gate_bias(g).size();
    for (int l = 0; l < 2; ++l) walk += v.fc_weight(l).size() + v.fc_bias(l).size();
    walk += v.actor_weight().size() + v.actor_bias().size() + v.critic_weight().size() +
            v.critic_bias().size();
    CHECK(walk == static_cast<long>(w.size()));
    CHECK(walk == count_weights(nb, ns, m, np, WeightConvention::kBiasEverywhere).total());
  }
}
