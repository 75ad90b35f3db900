#include "gfla/traffic.hpp"

#include <algorithm>
#include <stdexcept>

#include "gfla/errors.hpp"

namespace gfla {

int sample_arrivals(double rate, double tti, Rng& rng) {
  if (rate < 0.0) throw DomainError("sample_arrivals: negative rate");
  const double mean = rate * tti;
  if (mean == 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

int realize_goodput(int queued_before, int capacity, double p_loss, bool collided, Rng& rng) {
  if (queued_before < 0 || capacity < 0) throw DomainError("realize_goodput: negative count");
  if (collided || capacity == 0) return 0;
  const int attempted = std::min(capacity, queued_before);
  if (attempted == 0) return 0;
  return std::binomial_distribution<int>(attempted, 1.0 - std::clamp(p_loss, 0.0, 1.0))(rng);
}

BufferUpdate update_buffer(int queued_before, int arrivals, int goodput, int capacity) {
  if (goodput > queued_before || goodput < 0 || arrivals < 0)
    throw std::logic_error("update_buffer: goodput exceeds queue or negative counts");
  const int total = queued_before + arrivals - goodput;
  return {std::min(total, capacity), std::max(total - capacity, 0)};
}

}  // namespace gfla
