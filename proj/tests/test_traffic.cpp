#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "gfla/traffic.hpp"

using namespace gfla;

TEST_CASE("Poisson arrivals") {
  Rng rng(21);
  CHECK(sample_arrivals(0.0, 0.01, rng) == 0);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = sample_arrivals(40.0, 0.01, rng);
    sum += l;
    sq += l * l;
  }
  const double mean = sum / n;
  CHECK(std::fabs(mean - 0.4) < 0.002);
  CHECK(std::fabs(sq / n - mean * mean - 0.4) < 0.004);
  int zeros = 0;
  for (int i = 0; i < 100000; ++i) zeros += sample_arrivals(80.0, 0.01, rng) == 0;
  CHECK(std::fabs(zeros / 1e5 - std::exp(-0.8)) < 0.004);
}

TEST_CASE("goodput realization") {
  Rng rng(2);
  CHECK(realize_goodput(10, 4, 0.0, true, rng) == 0);
  CHECK(realize_goodput(10, 0, 0.0, false, rng) == 0);
  CHECK(realize_goodput(10, 4, 0.0, false, rng) == 4);
  CHECK(realize_goodput(2, 4, 0.0, false, rng) == 2);
  CHECK(realize_goodput(0, 4, 0.0, false, rng) == 0);
  CHECK(realize_goodput(5, 4, 1.0, false, rng) == 0);
  double sum = 0.0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) sum += realize_goodput(10, 4, 0.5507, false, rng);
  CHECK(std::fabs(sum / trials - 4 * 0.4493) < 0.02);
}

TEST_CASE("buffer update and conservation") {
  auto u = update_buffer(25, 5, 0, 25);
  CHECK(u.overflow == 5);
  CHECK(u.queued == 25);
  u = update_buffer(0, 0, 0, 25);
  CHECK(u.queued == 0);
  CHECK(u.overflow == 0);
  u = update_buffer(20, 10, 4, 25);
  CHECK(u.overflow == 1);
  CHECK(u.queued == 25);
  CHECK_THROWS_AS(update_buffer(3, 0, 4, 25), std::logic_error);

  Rng rng(6);
  int b = 0;
  for (int t = 0; t < 20000; ++t) {
    const int l = sample_arrivals(80.0, 0.01, rng);
    const int g = realize_goodput(b, 2, 0.3, t % 7 == 0, rng);
    const auto r = update_buffer(b, l, g, 25);
    REQUIRE(r.queued == b + l - g - r.overflow);
    REQUIRE(r.queued >= 0);
    REQUIRE(r.queued <= 25);
    b = r.queued;
  }
}

TEST_CASE("stable queue drains without overflow") {
  Rng rng(9);
  int b = 0;
  long overflow = 0;
  for (int t = 0; t < 50000; ++t) {
    const int g = realize_goodput(b, 4, 0.01, false, rng);
    const auto r = update_buffer(b, sample_arrivals(40.0, 0.01, rng), g, 25);
    overflow += r.overflow;
    b = r.queued;
  }
  CHECK(overflow == 0);
}
