#pragma once

// Rate-adaptive listen-before-talk contention within a (BS, subcarrier)
// domain, with preamble-based collision detection and packet capacity.

#include <span>
#include <vector>

#include "gfla/random.hpp"

namespace gfla {

struct ContentionConfig {
  double a = 8.0;          // CW design parameter
  int max_modulation = 4;  // M
  // Backoff slot length as a fraction of the TTI; <= 0 selects 1 / (2 CW_max).
  double slot_quantum = 0.0;

  int cw_max() const;
  double slot_fraction() const;
  // Throws DomainError when the invariants do not hold.
  void validate() const;
};

// floor(A 2^(M - beta)), at least 1.
int cw_min(int modulation, const ContentionConfig& cfg);

// Uniform on {0, ..., CW}; CW = CW_max for a device penalized by a collision
// in the previous TTI, cw_min(beta) otherwise.
int draw_backoff(int modulation, bool penalized, const ContentionConfig& cfg, Rng& rng);

struct Contender {
  int device = 0;
  int preamble = 0;
  int backoff = 0;
};

struct ContentionOutcome {
  std::vector<int> winners;   // minimum-backoff devices; all of them transmit
  std::vector<int> deferred;  // sensed an earlier start and stayed silent
  std::vector<int> collided;  // winners sharing a preamble with another winner
  // One entry per group of >= 2 winners on the same preamble.
  std::vector<std::vector<int>> collision_groups;

  int collision_events() const { return static_cast<int>(collision_groups.size()); }
};

// All contenders must belong to the same (BS, subcarrier) domain.
ContentionOutcome resolve_contention(std::span<const Contender> contenders);

struct PacketTiming {
  int packet_bits = 800;
  double symbol_duration = 1e-5;  // T_S = 1 / f_S
  double tti = 0.01;

  double contention_time(int backoff_slots, double slot_fraction) const {
    return backoff_slots * slot_fraction * tti;
  }
};

// floor(beta tau_tx / (L T_S)).
int packets_per_tti(int modulation, double tx_time, const PacketTiming& timing);

struct HarqFeedback {
  int acks = 0;
  int nacks = 0;
};

// One flag per attempted packet, true when the packet was lost.
HarqFeedback harq_feedback(int attempted, std::span<const bool> lost);
// Per-packet outcome counts; a collided transmission is all-NACK.
HarqFeedback harq_feedback(int attempted, int delivered, bool collided);

}  // namespace gfla
