#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "gfla/channel.hpp"
#include "gfla/neural.hpp"
#include "gfla/random.hpp"

namespace gfla::oracle {

double series_j0(double x) {
  const double q = -(x / 2.0) * (x / 2.0);
  double term = 1.0, sum = 1.0;
  for (int m = 1; m < 200; ++m) {
    term *= q / (static_cast<double>(m) * m);
    sum += term;
    if (std::fabs(term) < 1e-18 * std::max(1.0, std::fabs(sum))) break;
  }
  return sum;
}

double series_j0_first_zero() {
  double lo = 2.0, hi = 3.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (series_j0(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double erfc(double x) {
  if (x < 0.0) return 2.0 - erfc(-x);
  const double e = std::exp(-x * x);
  if (x < 3.0) {
    // erf(x) = 2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!
    double term = x, sum = x;
    for (int n = 1; n < 500; ++n) {
      term *= 2.0 * x * x / (2.0 * n + 1.0);
      sum += term;
      if (term < 1e-18 * sum) break;
    }
    return 1.0 - 2.0 / std::sqrt(std::numbers::pi) * e * sum;
  }
  // e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  double t = x;
  for (int n = 300; n >= 1; --n) t = x + 0.5 * n / t;
  return e / std::sqrt(std::numbers::pi) / t;
}

double packet_loss(double pe, int bits) {
  double survive = 1.0;
  for (int i = 0; i < bits; ++i) survive *= (1.0 - pe);
  return 1.0 - survive;
}

double qam_ber(double sinr, int beta) {
  if (beta == 1) return 0.5 * erfc(std::sqrt(sinr));
  const double m = std::pow(2.0, beta);
  return std::min(1.0, 2.0 * erfc(std::sqrt(3.0 * beta * sinr / (2.0 * (m - 1.0)))));
}

double half_to_double(std::uint16_t h) {
  const int sign = (h >> 15) & 1;
  const int exponent = (h >> 10) & 0x1F;
  const int mantissa = h & 0x3FF;
  double v;
  if (exponent == 0) {
    v = mantissa * std::pow(2.0, -24);
  } else if (exponent == 31) {
    v = mantissa ? std::nan("") : INFINITY;
  } else {
    v = (1.0 + mantissa / 1024.0) * std::pow(2.0, exponent - 15);
  }
  return sign ? -v : v;
}

Ar1Stats ar1_statistics(std::uint64_t seed, double kappa, int steps) {
  Rng rng(seed);
  FadingState s = FadingState::stationary(1, 1, 1, kappa, rng);
  std::vector<std::complex<double>> h(steps);
  for (int t = 0; t < steps; ++t) {
    h[t] = s.h[0];
    step_fading(s, rng);
  }
  double power = 0.0;
  std::complex<double> lag{0.0, 0.0};
  for (int t = 0; t < steps; ++t) power += std::norm(h[t]);
  for (int t = 0; t + 1 < steps; ++t) lag += h[t + 1] * std::conj(h[t]);
  Ar1Stats out;
  out.variance = power / steps;
  out.lag1 = (lag.real() / (steps - 1)) / out.variance;
  return out;
}

namespace {

struct Probe {
  Matrix h0;
  std::vector<Matrix> inputs;
  std::vector<Matrix> c_logits;
  std::vector<Eigen::RowVectorXd> c_values;
};

double probe_loss(const WeightBundle& w, const Probe& p) {
  const auto caches = forward_sequence(w, p.h0, p.inputs);
  double loss = 0.0;
  for (std::size_t t = 0; t < caches.size(); ++t) {
    loss += (caches[t].logits.array() * p.c_logits[t].array()).sum();
    loss += (caches[t].value.array() * p.c_values[t].array()).sum();
  }
  return loss;
}

}  // namespace

GradientCheck gradient_check(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NetworkDims d;
  d.input_dim = 6;
  d.hidden = 5;
  d.num_actions = 7;
  d.fc_activation = (seed % 2) ? Activation::kTanh : Activation::kRelu;
  WeightBundle w(d);
  for (double& v : w.values()) v = 0.6 * u(rng);

  const int steps = 3, batch = 2;
  Probe p;
  p.h0 = Matrix::NullaryExpr(d.hidden, batch, [&] { return 0.5 * u(rng); });
  for (int t = 0; t < steps; ++t) {
    p.inputs.push_back(Matrix::NullaryExpr(d.input_dim, batch, [&] { return u(rng); }));
    p.c_logits.push_back(Matrix::NullaryExpr(d.num_actions, batch, [&] { return u(rng); }));
    p.c_values.push_back(Eigen::RowVectorXd::NullaryExpr(batch, [&] { return u(rng); }));
  }
  const auto caches = forward_sequence(w, p.h0, p.inputs);
  const auto analytic = backward(w, caches, p.c_logits, p.c_values).grads;

  constexpr double kStep = 1e-5;
  GradientCheck out;
  out.parameters = static_cast<int>(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    WeightBundle plus = w, minus = w;
    plus.values()[i] += kStep;
    minus.values()[i] -= kStep;
    const double numeric = (probe_loss(plus, p) - probe_loss(minus, p)) / (2.0 * kStep);
    const double a = analytic.values()[i];
    const double rel =
        std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-6});
    out.max_relative_error = std::max(out.max_relative_error, rel);
  }
  return out;
}

}  // namespace gfla::oracle
