#include "gfla/neural.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "gfla/errors.hpp"

namespace gfla {

ParameterLayout::ParameterLayout(const NetworkDims& d)
    : input(d.input_dim), hidden(d.hidden), actions(d.num_actions) {
  if (input < 1 || hidden < 1 || actions < 1) throw DomainError("network dimensions must be positive");
  const auto h = static_cast<std::size_t>(hidden);
  gate_stride = h * input + h * h + h;
  fc[0] = 3 * gate_stride;
  fc[1] = fc[0] + h * h + h;
  actor = fc[1] + h * h + h;
  critic = actor + static_cast<std::size_t>(actions) * (h + 1);
  total = critic + h + 1;
}

std::size_t parameter_count(const NetworkDims& dims) { return ParameterLayout(dims).total; }

WeightCount count_weights(int num_base_stations, int num_subcarriers, int max_modulation,
                          int num_powers, WeightConvention convention, int hidden) {
  const long h = hidden;
  const long in = 4L + static_cast<long>(num_base_stations) * num_subcarriers;
  const long actions = 2L * max_modulation * num_powers * num_subcarriers;
  WeightCount c;
  c.gru = 3 * (h * h + h * in + h);
  if (convention == WeightConvention::kBiasEverywhere) {
    c.fully_connected = 2 * (h * h + h);
    c.actor_head = (h + 1) * actions;
    c.critic_head = h + 1;
  } else {
    c.fully_connected = 2 * h * h;
    c.actor_head = h * actions;
    c.critic_head = h;
  }
  return c;
}

double ParameterVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

std::uint64_t ParameterVector::checksum() const {
  std::uint64_t hash = 1469598103934665603ULL;
  for (double v : values_) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      hash ^= (bits >> (8 * i)) & 0xFF;
      hash *= 1099511628211ULL;
    }
  }
  return hash;
}

WeightBundle WeightBundle::random(const NetworkDims& dims, Rng& rng) {
  WeightBundle w(dims);
  auto fill = [&rng](auto&& block, double fan_in) {
    const double bound = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = u(rng);
  };
  auto v = w.mutable_view();
  const double h = dims.hidden;
  for (int g = 0; g < 3; ++g) {
    fill(v.gate_input(g), h);
    fill(v.gate_recurrent(g), h);
    fill(v.gate_bias(g), h);
  }
  for (int l = 0; l < 2; ++l) {
    fill(v.fc_weight(l), h);
    fill(v.fc_bias(l), h);
  }
  fill(v.actor_weight(), h);
  fill(v.actor_bias(), h);
  fill(v.critic_weight(), h);
  fill(v.critic_bias(), h);
  return w;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.size() != size()) throw RangeError("gradient size mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

namespace {

Matrix sigmoid(const Matrix& m) { return (1.0 + (-m.array()).exp()).inverse().matrix(); }

Matrix activate(const Matrix& m, Activation a) {
  return a == Activation::kRelu ? Matrix(m.cwiseMax(0.0)) : Matrix(m.array().tanh().matrix());
}

// Derivative expressed through the activation output.
Matrix activation_grad(const Matrix& out, Activation a) {
  if (a == Activation::kRelu) return (out.array() > 0.0).cast<double>().matrix();
  return (1.0 - out.array().square()).matrix();
}

}  // namespace

StepCache forward_step(const WeightBundle& w, const Matrix& hidden, const Matrix& input) {
  const auto v = w.view();
  const auto& d = w.dims();
  if (input.rows() != d.input_dim || hidden.rows() != d.hidden || input.cols() != hidden.cols())
    throw RangeError("forward: input/hidden shape mismatch (expected " +
                     std::to_string(d.input_dim) + " inputs)");
  StepCache c;
  c.x = input;
  c.h_prev = hidden;
  c.z = sigmoid((v.gate_input(kUpdateGate) * input + v.gate_recurrent(kUpdateGate) * hidden)
                    .colwise() + v.gate_bias(kUpdateGate));
  c.r = sigmoid((v.gate_input(kResetGate) * input + v.gate_recurrent(kResetGate) * hidden)
                    .colwise() + v.gate_bias(kResetGate));
  c.rh = c.r.cwiseProduct(hidden);
  c.n = ((v.gate_input(kCandidate) * input + v.gate_recurrent(kCandidate) * c.rh).colwise() +
         v.gate_bias(kCandidate))
            .array()
            .tanh()
            .matrix();
  c.h = (1.0 - c.z.array()).matrix().cwiseProduct(c.n) + c.z.cwiseProduct(hidden);
  c.a1 = activate((v.fc_weight(0) * c.h).colwise() + v.fc_bias(0), d.fc_activation);
  c.a2 = activate((v.fc_weight(1) * c.a1).colwise() + v.fc_bias(1), d.fc_activation);
  c.logits = (v.actor_weight() * c.a2).colwise() + v.actor_bias();
  c.value = (v.critic_weight() * c.a2).array() + v.critic_bias()(0);
  if (!c.logits.allFinite() || !c.value.allFinite() || !c.h.allFinite())
    throw NumericalError("forward: non-finite activations (max |input| = " +
                         std::to_string(input.cwiseAbs().maxCoeff()) + ")");
  return c;
}

ForwardOutput forward(const WeightBundle& w, const Vector& hidden, std::span<const double> input) {
  const Eigen::Map<const Vector> x(input.data(), static_cast<Eigen::Index>(input.size()));
  auto c = forward_step(w, hidden, x);
  return {c.logits.col(0), c.value(0), c.h.col(0)};
}

std::vector<StepCache> forward_sequence(const WeightBundle& w, const Matrix& h0,
                                        std::span<const Matrix> inputs) {
  std::vector<StepCache> caches;
  caches.reserve(inputs.size());
  const Matrix* h = &h0;
  for (const auto& x : inputs) {
    caches.push_back(forward_step(w, *h, x));
    h = &caches.back().h;
  }
  return caches;
}

BackwardResult backward(const WeightBundle& w, std::span<const StepCache> caches,
                        std::span<const Matrix> d_logits,
                        std::span<const Eigen::RowVectorXd> d_values) {
  if (caches.size() != d_logits.size() || caches.size() != d_values.size())
    throw RangeError("backward: output gradients do not match the recorded pass");
  const auto& d = w.dims();
  const auto v = w.view();
  BackwardResult out{Gradients(d), Matrix()};
  auto g = out.grads.mutable_view();
  if (caches.empty()) return out;

  const Eigen::Index batch = caches.front().x.cols();
  Matrix dh_next = Matrix::Zero(d.hidden, batch);
  for (std::size_t t = caches.size(); t-- > 0;) {
    const auto& c = caches[t];
    const auto& dl = d_logits[t];
    const auto& dv = d_values[t];
    if (dl.rows() != d.num_actions || dl.cols() != batch || dv.cols() != batch)
      throw RangeError("backward: output gradient shape mismatch at step " + std::to_string(t));

    g.actor_weight().noalias() += dl * c.a2.transpose();
    g.actor_bias() += dl.rowwise().sum();
    g.critic_weight().noalias() += dv * c.a2.transpose();
    g.critic_bias()(0) += dv.sum();

    Matrix da2 = v.actor_weight().transpose() * dl + v.critic_weight().transpose() * dv;
    Matrix dpre2 = da2.cwiseProduct(activation_grad(c.a2, d.fc_activation));
    g.fc_weight(1).noalias() += dpre2 * c.a1.transpose();
    g.fc_bias(1) += dpre2.rowwise().sum();
    Matrix da1 = v.fc_weight(1).transpose() * dpre2;
    Matrix dpre1 = da1.cwiseProduct(activation_grad(c.a1, d.fc_activation));
    g.fc_weight(0).noalias() += dpre1 * c.h.transpose();
    g.fc_bias(0) += dpre1.rowwise().sum();

    Matrix dh = v.fc_weight(0).transpose() * dpre1 + dh_next;

    // h = (1 - z) n + z h_prev
    Matrix dn = dh.cwiseProduct((1.0 - c.z.array()).matrix());
    Matrix dz = dh.cwiseProduct(c.h_prev - c.n);
    Matrix dh_prev = dh.cwiseProduct(c.z);

    Matrix dn_pre = dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
    g.gate_input(kCandidate).noalias() += dn_pre * c.x.transpose();
    g.gate_recurrent(kCandidate).noalias() += dn_pre * c.rh.transpose();
    g.gate_bias(kCandidate) += dn_pre.rowwise().sum();
    Matrix drh = v.gate_recurrent(kCandidate).transpose() * dn_pre;
    Matrix dr = drh.cwiseProduct(c.h_prev);
    dh_prev += drh.cwiseProduct(c.r);

    Matrix dz_pre = dz.cwiseProduct((c.z.array() * (1.0 - c.z.array())).matrix());
    g.gate_input(kUpdateGate).noalias() += dz_pre * c.x.transpose();
    g.gate_recurrent(kUpdateGate).noalias() += dz_pre * c.h_prev.transpose();
    g.gate_bias(kUpdateGate) += dz_pre.rowwise().sum();
    dh_prev.noalias() += v.gate_recurrent(kUpdateGate).transpose() * dz_pre;

    Matrix dr_pre = dr.cwiseProduct((c.r.array() * (1.0 - c.r.array())).matrix());
    g.gate_input(kResetGate).noalias() += dr_pre * c.x.transpose();
    g.gate_recurrent(kResetGate).noalias() += dr_pre * c.h_prev.transpose();
    g.gate_bias(kResetGate) += dr_pre.rowwise().sum();
    dh_prev.noalias() += v.gate_recurrent(kResetGate).transpose() * dr_pre;

    dh_next = std::move(dh_prev);
  }
  out.d_h0 = std::move(dh_next);
  return out;
}

void adam_step(WeightBundle& w, const Gradients& grads, AdamState& s, double learning_rate) {
  if (grads.size() != w.size() || s.m.size() != w.size())
    throw RangeError("adam_step: shape mismatch");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  auto params = w.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double m_hat = s.m[i] / c1;
    const double v_hat = s.v[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

double clip_gradients(Gradients& grads, double max_norm) {
  const double n = grads.norm();
  if (n > max_norm && n > 0.0) grads *= max_norm / n;
  return n;
}

std::uint16_t to_half(double v) {
  const std::uint16_t sign = std::signbit(v) ? 0x8000 : 0;
  if (std::isnan(v)) return 0x7E00;
  const double a = std::abs(v);
  if (a >= 65520.0) return sign | 0x7C00;
  if (a < std::ldexp(1.0, -14)) {
    // Subnormal range, unit 2^-24. May round up to the smallest normal.
    const auto m = static_cast<std::uint16_t>(std::nearbyint(std::ldexp(a, 24)));
    return sign | m;
  }
  int e = 0;
  std::frexp(a, &e);
  int exponent = e - 1;
  auto mant = static_cast<int>(std::nearbyint((std::ldexp(a, -exponent) - 1.0) * 1024.0));
  if (mant == 1024) {
    mant = 0;
    ++exponent;
  }
  if (exponent > 15) return sign | 0x7C00;
  return sign | static_cast<std::uint16_t>(((exponent + 15) << 10) | mant);
}

double from_half(std::uint16_t h) {
  const double sign = (h & 0x8000) ? -1.0 : 1.0;
  const int exponent = (h >> 10) & 0x1F;
  const int mant = h & 0x3FF;
  if (exponent == 0) return sign * std::ldexp(mant, -24);
  if (exponent == 31) return mant ? std::nan("") : sign * INFINITY;
  return sign * std::ldexp(1024 + mant, exponent - 25);
}

namespace {

constexpr std::uint8_t kMagic[4] = {'G', 'F', 'L', 'W'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_le(std::span<const std::uint8_t> b, std::size_t at, int n) {
  std::uint32_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const WeightBundle& w) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 2 * w.size());
  for (std::uint8_t c : kMagic) out.push_back(c);
  put_u16(out, kFormatVersion);
  put_u16(out, static_cast<std::uint16_t>(w.dims().hidden));
  put_u32(out, static_cast<std::uint32_t>(w.dims().input_dim));
  put_u32(out, static_cast<std::uint32_t>(w.dims().num_actions));
  for (double v : w.values()) put_u16(out, to_half(v));
  return out;
}

WeightBundle deserialize_weights(std::span<const std::uint8_t> bytes, Activation fc_activation) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DecodeError("weights: bad magic or truncated header");
  if (get_le(bytes, 4, 2) != kFormatVersion) throw DecodeError("weights: unsupported version");
  NetworkDims dims;
  dims.hidden = static_cast<int>(get_le(bytes, 6, 2));
  dims.input_dim = static_cast<int>(get_le(bytes, 8, 4));
  dims.num_actions = static_cast<int>(get_le(bytes, 12, 4));
  dims.fc_activation = fc_activation;
  if (dims.hidden < 1 || dims.input_dim < 1 || dims.num_actions < 1 || dims.input_dim > (1 << 20) ||
      dims.num_actions > (1 << 24))
    throw DecodeError("weights: implausible dimensions in header");
  WeightBundle w(dims);
  if (bytes.size() != 16 + 2 * w.size())
    throw DecodeError("weights: payload length " + std::to_string(bytes.size() - 16) +
                      " does not match " + std::to_string(2 * w.size()));
  auto values = w.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = from_half(static_cast<std::uint16_t>(get_le(bytes, 16 + 2 * i, 2)));
    if (!std::isfinite(values[i])) throw DecodeError("weights: non-finite value");
  }
  return w;
}

Vector log_softmax(const Eigen::Ref<const Vector>& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

}  // namespace gfla
