#include "gfla/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gfla/errors.hpp"

namespace gfla {

void PpoHyperparams::validate() const {
  if (!(clip > 0.0)) throw DomainError("ppo: clip must be positive");
  if (epochs * minibatches < 1) throw DomainError("ppo: need at least one optimizer step");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("ppo: gamma must lie in [0, 1)");
  if (learning_rate < 0.0) throw DomainError("ppo: negative learning rate");
}

RolloutBuffer::RolloutBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw DomainError("rollout buffer capacity must be positive");
  items_.reserve(capacity);
}

void RolloutBuffer::push(Experience e) {
  if (full()) throw RangeError("rollout buffer is full");
  if (!std::isfinite(e.log_prob) || !std::isfinite(e.value))
    throw NumericalError("rollout buffer: non-finite log-probability or value");
  items_.push_back(std::move(e));
}

void RolloutBuffer::clear() {
  items_.clear();
  bootstrap_value = 0.0;
}

ReturnsAndAdvantages compute_returns_and_advantages(const RolloutBuffer& buffer, double gamma,
                                                    double bootstrap_value) {
  if (buffer.empty()) throw DomainError("compute_returns: empty buffer");
  const int n = buffer.size();
  ReturnsAndAdvantages out;
  out.returns.resize(n);
  out.advantages.resize(n);
  double running = bootstrap_value;
  for (int t = n - 1; t >= 0; --t) {
    running = -buffer[t].cost + gamma * running;
    out.returns[t] = running;
    out.advantages[t] = running - buffer[t].value;
  }
  return out;
}

void normalize_advantages(std::span<double> advantages, double eps) {
  if (advantages.size() < 2) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::max(std::sqrt(var / n), eps);
  for (double& a : advantages) a = (a - mean) / sd;
}

double clipped_surrogate(double log_prob_new, double log_prob_old, double advantage, double clip) {
  const double ratio = std::exp(log_prob_new - log_prob_old);
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

SurrogateResult surrogate_objective(const SurrogateBatch& batch, const WeightBundle& weights,
                                    const PpoHyperparams& hyper) {
  const auto n = static_cast<Eigen::Index>(batch.actions.size());
  if (n == 0) throw DomainError("surrogate_objective: empty batch");
  if (batch.features.cols() != n || batch.hidden.cols() != n ||
      batch.old_log_probs.size() != batch.actions.size() ||
      batch.advantages.size() != batch.actions.size() ||
      batch.value_targets.size() != batch.actions.size())
    throw RangeError("surrogate_objective: inconsistent batch");

  const StepCache cache = forward_step(weights, batch.hidden, batch.features);
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix d_logits = Matrix::Zero(cache.logits.rows(), n);
  Eigen::RowVectorXd d_value = Eigen::RowVectorXd::Zero(n);

  SurrogateResult r;
  int clipped = 0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const Vector lp = log_softmax(cache.logits.col(b));
    const Vector p = lp.array().exp().matrix();
    const int a = batch.actions[b];
    const double adv = batch.advantages[b];
    const double ratio = std::exp(lp(a) - batch.old_log_probs[b]);
    const double entropy = -(p.array() * lp.array()).sum();
    r.clip_term += clipped_surrogate(lp(a), batch.old_log_probs[b], adv, hyper.clip);
    r.entropy += entropy;
    const double verr = cache.value(b) - batch.value_targets[b];
    r.value_loss += verr * verr;

    if (hyper.policy_terms) {
      // The clipped branch is flat in the ratio.
      const bool binds = (adv >= 0.0 && ratio > 1.0 + hyper.clip) ||
                         (adv < 0.0 && ratio < 1.0 - hyper.clip);
      if (binds) ++clipped;
      const double g_lp = binds ? 0.0 : ratio * adv;
      auto col = d_logits.col(b);
      col = -g_lp * p;
      col(a) += g_lp;
      col.array() -= hyper.entropy_coef * p.array() * (lp.array() + entropy);
      col *= inv_n;
    }
    if (hyper.value_terms) d_value(b) = -2.0 * hyper.value_coef * verr * inv_n;
  }
  r.clip_term *= inv_n;
  r.entropy *= inv_n;
  r.value_loss *= inv_n;
  r.clip_fraction = clipped * inv_n;
  r.objective = (hyper.policy_terms ? r.clip_term + hyper.entropy_coef * r.entropy : 0.0) -
                (hyper.value_terms ? hyper.value_coef * r.value_loss : 0.0);
  if (!std::isfinite(r.objective)) {
    const char* which = !std::isfinite(r.clip_term)    ? "clipped surrogate"
                        : !std::isfinite(r.value_loss) ? "value loss"
                                                       : "entropy";
    throw NumericalError(std::string("surrogate_objective: non-finite ") + which);
  }

  const StepCache* caches = &cache;
  r.gradient = backward(weights, std::span<const StepCache>(caches, 1),
                        std::span<const Matrix>(&d_logits, 1),
                        std::span<const Eigen::RowVectorXd>(&d_value, 1))
                   .grads;
  return r;
}

void ReturnScaler::update(std::span<const double> returns) {
  for (double x : returns) {
    count_ += 1.0;
    const double delta = x - mean_;
    mean_ += delta / count_;
    m2_ += delta * (x - mean_);
  }
}

double ReturnScaler::scale() const {
  if (count_ < 2.0) return 1.0;
  return std::max(std::sqrt(m2_ / count_), 1e-3);
}

namespace {

struct PooledSample {
  const Experience* e;
  double advantage;
  double target;  // raw return
};

void fill_batch(const std::vector<PooledSample>& pool, std::span<const int> idx,
                const std::vector<double>& old_lp, double scale, SurrogateBatch& batch) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  const auto in = static_cast<Eigen::Index>(pool.front().e->features.size());
  const auto h = pool.front().e->hidden.size();
  batch.features.resize(in, n);
  batch.hidden.resize(h, n);
  batch.actions.resize(n);
  batch.old_log_probs.resize(n);
  batch.advantages.resize(n);
  batch.value_targets.resize(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto& s = pool[idx[b]];
    batch.features.col(b) = Eigen::Map<const Vector>(s.e->features.data(), in);
    batch.hidden.col(b) = s.e->hidden;
    batch.actions[b] = s.e->action;
    batch.old_log_probs[b] = old_lp[idx[b]];
    batch.advantages[b] = s.advantage;
    batch.value_targets[b] = s.target / scale;
  }
}

}  // namespace

PpoUpdateStats ppo_update(std::span<RolloutBuffer> streams, WeightBundle& weights,
                          AdamState& adam, const PpoHyperparams& hyper, Rng& rng,
                          ReturnScaler* scaler) {
  hyper.validate();
  std::vector<PooledSample> pool;
  std::vector<double> advantages;
  std::vector<double> all_returns;
  for (const auto& s : streams) {
    if (s.empty()) continue;
    auto ra = compute_returns_and_advantages(s, hyper.gamma, s.bootstrap_value);
    for (int t = 0; t < s.size(); ++t) {
      pool.push_back({&s[t], 0.0, ra.returns[t]});
      advantages.push_back(ra.advantages[t]);
    }
    all_returns.insert(all_returns.end(), ra.returns.begin(), ra.returns.end());
  }
  if (pool.empty()) throw DomainError("ppo_update: no experience");
  if (hyper.normalize_advantages) normalize_advantages(advantages);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].advantage = advantages[i];
  if (scaler) scaler->update(all_returns);
  const double scale = scaler ? scaler->scale() : 1.0;

  const WeightBundle old_policy = weights;
  const AdamState adam_backup = adam;
  PpoUpdateStats stats;
  stats.samples = static_cast<int>(pool.size());
  stats.old_policy_checksum_before = old_policy.checksum();

  try {
    // Behaviour log-probabilities under the frozen snapshot.
    std::vector<double> old_lp(pool.size());
    {
      std::vector<int> all(pool.size());
      std::iota(all.begin(), all.end(), 0);
      constexpr int kChunk = 512;
      const std::vector<double> zeros(all.size(), 0.0);
      SurrogateBatch b;
      for (std::size_t start = 0; start < all.size(); start += kChunk) {
        const auto len = std::min<std::size_t>(kChunk, all.size() - start);
        fill_batch(pool, std::span<const int>(all).subspan(start, len), zeros, scale, b);
        const StepCache c = forward_step(old_policy, b.hidden, b.features);
        for (std::size_t k = 0; k < len; ++k) {
          const Vector lp = log_softmax(c.logits.col(static_cast<Eigen::Index>(k)));
          old_lp[start + k] = lp(b.actions[k]);
        }
      }
    }

    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    const int chunks = std::min<int>(hyper.minibatches, static_cast<int>(pool.size()));
    SurrogateBatch batch;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (int m = 0; m < chunks; ++m) {
        const std::size_t lo = pool.size() * m / chunks;
        const std::size_t hi = pool.size() * (m + 1) / chunks;
        if (hi == lo) continue;
        fill_batch(pool, std::span<const int>(order).subspan(lo, hi - lo), old_lp, scale, batch);
        SurrogateResult r = surrogate_objective(batch, weights, hyper);
        r.gradient *= -1.0;  // Adam descends
        clip_gradients(r.gradient, hyper.max_grad_norm);
        adam_step(weights, r.gradient, adam, hyper.learning_rate);
        ++stats.optimizer_steps;
        stats.objective = r.objective;
        stats.value_loss = r.value_loss;
        stats.entropy = r.entropy;
        stats.clip_fraction = r.clip_fraction;
      }
    }
    for (double v : weights.values())
      if (!std::isfinite(v)) throw NumericalError("ppo_update: non-finite weights after step");
  } catch (const NumericalError&) {
    weights = old_policy;
    adam = adam_backup;
    for (auto& s : streams) s.clear();
    throw;
  }
  stats.old_policy_checksum_after = old_policy.checksum();
  for (auto& s : streams) s.clear();
  return stats;
}

int sample_categorical(const Vector& logits, Rng& rng) {
  const double m = logits.maxCoeff();
  const Vector w = (logits.array() - m).exp().matrix();
  const double u = uniform01(rng) * w.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += w(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(w.size() - 1);
}

}  // namespace gfla
