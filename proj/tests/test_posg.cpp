#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "gfla/errors.hpp"
#include "gfla/posg.hpp"
#include "gfla/random.hpp"

using namespace gfla;

TEST_CASE("overflow penalty") {
  CHECK(mu(0.99) == 99.0);
  CHECK(mu(0.5) == 1.0);
  CHECK(mu(0.9) == 9.0);
  CHECK_THROWS_AS(mu(1.0), DomainError);
  CHECK_THROWS_AS(mu(0.0), DomainError);
  // Geometric identity sum_{t>=0} gamma^{t+1} = mu.
  for (double g : {0.3, 0.77, 0.95}) {
    double s = 0.0, p = g;
    for (int t = 0; t < 5000; ++t, p *= g) s += p;
    CHECK(std::fabs(s - mu(g)) < 1e-10);
  }
}

TEST_CASE("Lagrange multiplier") {
  CHECK(omega_update(3, 0, 4, 99, 1.0) == 0.0);
  CHECK(omega_update(12, 0, 4, 99, 1.0) == 8.0);
  CHECK(omega_update(4, 1, 4, 99, 0.1) == doctest::Approx(9.9));
}

TEST_CASE("cost functions") {
  CostParams p;
  CHECK(local_cost({0, 0.0, 0.0, 5, 0}, p) == 0.0);
  CHECK(local_cost({1, 0.010, 0.0, 5, 0}, p) == doctest::Approx(0.330));
  CHECK(local_cost({1, 0.040, 0.5, 6, 0}, p) == doctest::Approx(3.36));
  CHECK(power_cost({1, 0.040, 0.5, 6, 0}, p) == doctest::Approx(0.36));
  p.p_off_w = 0.002;
  CHECK(local_cost({0, 0.5, 0.0, 0, 0}, p) == doctest::Approx(0.002));
  p.p_off_w = 0.0;
  // The overflow term is weighted by mu.
  CHECK(local_cost({0, 0.0, 2.0, 3, 1}, p) == doctest::Approx(2.0 * (3 + 99)));

  std::vector<CostTerms> two{{1, 0.010, 0.0, 0, 0}, {1, 0.040, 0.5, 6, 0}};
  CHECK(global_cost(two, p) == doctest::Approx(3.69));
  CHECK(cldi_cost(two, p) == doctest::Approx(1.845));
  std::vector<CostTerms> idle{{1, 0.010, 0.0, 0, 0}, {0, 0.0, 0.0, 0, 0}};
  CHECK(cldi_cost(idle, p) == doctest::Approx(0.165));
  CHECK_THROWS(cldi_cost(std::span<const CostTerms>(), p));

  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CostTerms> ts(7);
    double sum = 0.0;
    for (auto& t : ts) {
      t = {u(rng) < 0.5 ? 1 : 0, 0.16 * u(rng), 3 * u(rng), static_cast<int>(25 * u(rng)),
           static_cast<int>(3 * u(rng))};
      const double c = local_cost(t, p);
      CHECK(c >= 0.0);
      sum += c;
    }
    CHECK(global_cost(ts, p) == doctest::Approx(sum).epsilon(1e-14));
    CHECK(cldi_cost(ts, p) == doctest::Approx(sum / 7).epsilon(1e-14));
  }
}

TEST_CASE("action encoding") {
  ActionSpace s(4, 5, 8);
  CHECK(s.size() == 320);
  CHECK(s.encode({0, 1, 0, 0}) == 0);
  std::set<int> seen;
  for (int i = 0; i < s.size(); ++i) {
    const Action a = s.decode(i);
    CHECK(s.encode(a) == i);
    seen.insert(i);
  }
  CHECK(seen.size() == 320u);
  CHECK(s.decode(319) == Action{1, 4, 4, 7});
  CHECK_THROWS_AS(s.decode(320), RangeError);
  CHECK_THROWS_AS(s.decode(-1), RangeError);
  CHECK_THROWS_AS(s.encode({2, 1, 0, 0}), RangeError);
  CHECK_THROWS_AS(s.encode({1, 5, 0, 0}), RangeError);
  CHECK_THROWS_AS(s.encode({1, 1, 5, 0}), RangeError);
  CHECK_THROWS_AS(s.encode({1, 1, 0, 8}), RangeError);
}

TEST_CASE("observation features") {
  CHECK(feature_dim(2, 8) == 20);
  Observation o;
  o.channel_gains.assign(16, 1e-13);
  o.queued = 25;
  o.arrivals = 2;
  o.goodput = 1;
  o.overflow = 3;
  const auto f = encode_features(o, FeatureScaling{});
  REQUIRE(f.size() == 20u);
  for (int k = 0; k < 16; ++k) CHECK(f[k] == doctest::Approx(-2.5));
  CHECK(f[16] == doctest::Approx(4.0));
  CHECK(f[17] == doctest::Approx(0.5));
  CHECK(f[18] == doctest::Approx(0.25));
  CHECK(f[19] == doctest::Approx(0.75));
  o.channel_gains[0] = 0.0;  // deep fade stays finite
  CHECK(std::isfinite(encode_features(o, FeatureScaling{})[0]));
}
