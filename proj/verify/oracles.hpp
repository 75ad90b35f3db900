#pragma once

// Reference implementations written independently of the library code,
// used to cross-check it.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gfla::oracle {

// Power series sum_m (-1)^m (x/2)^(2m) / (m!)^2, summed until terms vanish.
double series_j0(double x);
// First positive zero of series_j0 by bisection on [2, 3].
double series_j0_first_zero();

// erfc from the Maclaurin series of erf for x < 3 and a Lentz-evaluated
// continued fraction above.
double erfc(double x);

// 1 - (1 - pe)^L by repeated multiplication.
double packet_loss(double pe, int bits);

// Bit error probability written directly from the QAM expression with the
// constellation-size convention.
double qam_ber(double sinr, int beta);

// Exact halves: decode a binary16 pattern bit by bit.
double half_to_double(std::uint16_t h);

// Sample lag-1 autocorrelation and mean power of a complex series.
struct Ar1Stats {
  double lag1 = 0.0;
  double variance = 0.0;
};
Ar1Stats ar1_statistics(std::uint64_t seed, double kappa, int steps);

// Largest relative error between reverse-mode gradients and central
// differences (step 1e-5) for a random network, sequence and loss.
struct GradientCheck {
  double max_relative_error = 0.0;
  int parameters = 0;
};
GradientCheck gradient_check(std::uint64_t seed);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Grouped checks; each group is a pure function of its fixed seeds.
std::vector<Check> formula_checks();
std::vector<Check> fading_checks(int steps = 100000);
std::vector<Check> gradient_checks(int seeds = 10);
std::vector<Check> ppo_checks();
std::vector<Check> overhead_checks();
std::vector<Check> serialization_checks();

// Every group above.
std::vector<Check> full_suite();

}  // namespace gfla::oracle
