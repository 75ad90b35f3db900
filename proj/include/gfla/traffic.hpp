#pragma once

// Poisson arrivals and finite-buffer bookkeeping.

#include "gfla/random.hpp"

namespace gfla {

struct BufferState {
  int queued = 0;       // b
  int capacity = 25;    // L_B
  int arrivals = 0;     // l, last TTI
  int goodput = 0;      // g, last TTI
  int overflow = 0;     // xi, last TTI
  double arrival_rate = 0.0;  // lambda, packets/s
  int delay_constraint = 0;   // delta, packets
};

// Poisson draw with mean rate * tti.
int sample_arrivals(double rate, double tti, Rng& rng);

// Packets delivered this TTI: 0 when collided or nothing could be sent,
// otherwise Binomial(min(capacity, queued), 1 - p_loss). Lost packets stay
// queued for the next attempt.
int realize_goodput(int queued_before, int capacity, double p_loss, bool collided, Rng& rng);

struct BufferUpdate {
  int queued = 0;
  int overflow = 0;
};

// xi = max(b + l - g - L_B, 0), b' = min(b - g + l, L_B). Requires g <= b.
BufferUpdate update_buffer(int queued_before, int arrivals, int goodput, int capacity);

}  // namespace gfla
