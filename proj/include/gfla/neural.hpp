#pragma once

// GRU-trunk actor-critic network with hand-written reverse-mode gradients.
//
// Parameter order (also the serialized order): GRU gates z, r, h, each as
// input weights (H x in), recurrent weights (H x H) and bias (H); fc1 weight
// and bias; fc2 weight and bias; actor head weight (A x H) and bias (A);
// critic head weight (1 x H) and bias. Matrices are column-major.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "gfla/random.hpp"

namespace gfla {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kTanh };

struct NetworkDims {
  int input_dim = 0;
  int hidden = 32;
  int num_actions = 0;
  Activation fc_activation = Activation::kRelu;

  bool operator==(const NetworkDims&) const = default;
};

struct ParameterLayout {
  explicit ParameterLayout(const NetworkDims& d);

  std::size_t gate(int g) const { return static_cast<std::size_t>(g) * gate_stride; }
  std::size_t gate_recurrent(int g) const { return gate(g) + static_cast<std::size_t>(hidden) * input; }
  std::size_t gate_bias(int g) const { return gate_recurrent(g) + static_cast<std::size_t>(hidden) * hidden; }

  int input;
  int hidden;
  int actions;
  std::size_t gate_stride;
  std::size_t fc[2];
  std::size_t actor;
  std::size_t critic;
  std::size_t total;
};

std::size_t parameter_count(const NetworkDims& dims);

enum class WeightConvention {
  kBiasEverywhere,  // 33 parameters per head output
  kWeightsOnly,     // weights only on the heads and fully connected layers
};

struct WeightCount {
  long gru = 0;
  long fully_connected = 0;
  long actor_head = 0;
  long critic_head = 0;
  long total() const { return gru + fully_connected + actor_head + critic_head; }
};

WeightCount count_weights(int num_base_stations, int num_subcarriers, int max_modulation,
                          int num_powers, WeightConvention convention, int hidden = 32);

// Typed views over a flat parameter array.
template <bool Const>
class NetworkView {
  using Ptr = std::conditional_t<Const, const double*, double*>;

 public:
  using Mat = Eigen::Map<std::conditional_t<Const, const Matrix, Matrix>>;
  using Vec = Eigen::Map<std::conditional_t<Const, const Vector, Vector>>;

  NetworkView(const NetworkDims& dims, Ptr data) : layout_(dims), p_(data) {}

  Mat gate_input(int g) const { return Mat(p_ + layout_.gate(g), layout_.hidden, layout_.input); }
  Mat gate_recurrent(int g) const {
    return Mat(p_ + layout_.gate_recurrent(g), layout_.hidden, layout_.hidden);
  }
  Vec gate_bias(int g) const { return Vec(p_ + layout_.gate_bias(g), layout_.hidden); }
  Mat fc_weight(int l) const { return Mat(p_ + layout_.fc[l], layout_.hidden, layout_.hidden); }
  Vec fc_bias(int l) const {
    return Vec(p_ + layout_.fc[l] + static_cast<std::size_t>(layout_.hidden) * layout_.hidden,
               layout_.hidden);
  }
  Mat actor_weight() const { return Mat(p_ + layout_.actor, layout_.actions, layout_.hidden); }
  Vec actor_bias() const {
    return Vec(p_ + layout_.actor + static_cast<std::size_t>(layout_.actions) * layout_.hidden,
               layout_.actions);
  }
  Mat critic_weight() const { return Mat(p_ + layout_.critic, 1, layout_.hidden); }
  Vec critic_bias() const { return Vec(p_ + layout_.critic + layout_.hidden, 1); }

  const ParameterLayout& layout() const { return layout_; }

 private:
  ParameterLayout layout_;
  Ptr p_;
};

enum GateIndex { kUpdateGate = 0, kResetGate = 1, kCandidate = 2 };

class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(const NetworkDims& dims)
      : dims_(dims), values_(parameter_count(dims), 0.0) {}

  const NetworkDims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  NetworkView<true> view() const { return {dims_, values_.data()}; }
  NetworkView<false> mutable_view() { return {dims_, values_.data()}; }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }
  double norm() const;
  // FNV-1a over the raw bytes.
  std::uint64_t checksum() const;

 protected:
  NetworkDims dims_;
  std::vector<double> values_;
};

class WeightBundle : public ParameterVector {
 public:
  using ParameterVector::ParameterVector;
  // Uniform in +-sqrt(1/fan_in) per layer.
  static WeightBundle random(const NetworkDims& dims, Rng& rng);
};

class Gradients : public ParameterVector {
 public:
  using ParameterVector::ParameterVector;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

// Cached activations of one batched time step; column b is sample b.
struct StepCache {
  Matrix x, h_prev;
  Matrix z, r, n, h;
  Matrix rh;  // r .* h_prev
  Matrix a1, a2;
  Matrix logits;
  Eigen::RowVectorXd value;
};

struct ForwardOutput {
  Vector logits;
  double value = 0.0;
  Vector hidden;
};

// One step for a batch of columns. Throws NumericalError on non-finite outputs.
StepCache forward_step(const WeightBundle& w, const Matrix& hidden, const Matrix& input);

ForwardOutput forward(const WeightBundle& w, const Vector& hidden, std::span<const double> input);

// Runs the recurrence over a sequence of batched inputs from h0.
std::vector<StepCache> forward_sequence(const WeightBundle& w, const Matrix& h0,
                                        std::span<const Matrix> inputs);

struct BackwardResult {
  Gradients grads;
  Matrix d_h0;  // gradient w.r.t. the initial hidden state
};

// Reverse-mode pass through a recorded sequence given dL/dlogits and
// dL/dvalue at every step. Gradients do not flow past the first step.
BackwardResult backward(const WeightBundle& w, std::span<const StepCache> caches,
                        std::span<const Matrix> d_logits,
                        std::span<const Eigen::RowVectorXd> d_values);

struct AdamState {
  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam descent step along `grads`.
void adam_step(WeightBundle& w, const Gradients& grads, AdamState& state, double learning_rate);

// Rescales to global 2-norm <= max_norm. Returns the norm before clipping.
double clip_gradients(Gradients& grads, double max_norm = 0.5);

// IEEE binary16 conversion, round to nearest even.
std::uint16_t to_half(double v);
double from_half(std::uint16_t h);

// 16-byte header (magic "GFLW", u16 version, u16 hidden, u32 input_dim,
// u32 num_actions) then little-endian binary16 values in parameter order.
std::vector<std::uint8_t> serialize_weights(const WeightBundle& w);
WeightBundle deserialize_weights(std::span<const std::uint8_t> bytes,
                                 Activation fc_activation = Activation::kRelu);

// Softmax helpers used for sampling and the PPO loss.
Vector log_softmax(const Eigen::Ref<const Vector>& logits);

}  // namespace gfla
