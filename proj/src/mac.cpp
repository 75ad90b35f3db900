#include "gfla/mac.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "gfla/errors.hpp"

namespace gfla {

int ContentionConfig::cw_max() const {
  return static_cast<int>(std::floor(a * std::ldexp(1.0, max_modulation)));
}

double ContentionConfig::slot_fraction() const {
  return slot_quantum > 0.0 ? slot_quantum : 1.0 / (2.0 * cw_max());
}

void ContentionConfig::validate() const {
  if (!(a > 0.0)) throw DomainError("contention: A must be positive");
  if (max_modulation < 1) throw DomainError("contention: M must be >= 1");
  for (int b = 1; b <= max_modulation; ++b)
    if (cw_max() < cw_min(b, *this)) throw DomainError("contention: CW_max < CW_min");
  if (cw_max() * slot_fraction() >= 1.0)
    throw DomainError("contention: backoff window does not fit in one TTI");
}

int cw_min(int modulation, const ContentionConfig& cfg) {
  if (modulation < 1 || modulation > cfg.max_modulation)
    throw DomainError("cw_min: modulation order " + std::to_string(modulation));
  const int cw = static_cast<int>(std::floor(cfg.a * std::ldexp(1.0, cfg.max_modulation - modulation)));
  return std::max(cw, 1);
}

int draw_backoff(int modulation, bool penalized, const ContentionConfig& cfg, Rng& rng) {
  const int cw = penalized ? cfg.cw_max() : cw_min(modulation, cfg);
  return std::uniform_int_distribution<int>(0, cw)(rng);
}

ContentionOutcome resolve_contention(std::span<const Contender> contenders) {
  ContentionOutcome out;
  if (contenders.empty()) return out;
  const int min_backoff =
      std::min_element(contenders.begin(), contenders.end(), [](const auto& l, const auto& r) {
        return l.backoff < r.backoff;
      })->backoff;
  std::map<int, std::vector<int>> by_preamble;
  for (const auto& c : contenders) {
    if (c.backoff == min_backoff) {
      out.winners.push_back(c.device);
      by_preamble[c.preamble].push_back(c.device);
    } else {
      out.deferred.push_back(c.device);
    }
  }
  for (auto& [preamble, group] : by_preamble) {
    if (group.size() < 2) continue;
    out.collided.insert(out.collided.end(), group.begin(), group.end());
    out.collision_groups.push_back(std::move(group));
  }
  return out;
}

int packets_per_tti(int modulation, double tx_time, const PacketTiming& timing) {
  if (tx_time < 0.0 || tx_time > timing.tti * (1.0 + 1e-12))
    throw DomainError("packets_per_tti: transmission time outside [0, TTI]");
  const double packets = modulation * tx_time / (timing.packet_bits * timing.symbol_duration);
  // Guard against 0.008 / 0.008 evaluating to 0.999...
  return static_cast<int>(std::floor(packets + 1e-9));
}

HarqFeedback harq_feedback(int attempted, std::span<const bool> lost) {
  if (attempted != static_cast<int>(lost.size()))
    throw DomainError("harq_feedback: attempted count differs from outcome list");
  HarqFeedback fb;
  for (bool l : lost) (l ? fb.nacks : fb.acks)++;
  return fb;
}

HarqFeedback harq_feedback(int attempted, int delivered, bool collided) {
  if (collided) return {0, attempted};
  return {delivered, attempted - delivered};
}

}  // namespace gfla
