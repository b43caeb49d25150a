#include "desloc/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace desloc {

std::optional<double> relative_rate_of_change(const ParamVector& s_prev,
                                              const ParamVector& s_now) {
  if (s_prev.size() != s_now.size()) throw std::invalid_argument("dimension mismatch");
  const double ref = l2_norm(s_prev);
  if (ref == 0.0) return std::nullopt;
  return l2_norm(sub(s_now, s_prev)) / ref;
}

namespace {

// Number of sync events in steps 1..T-1 for one policy.
std::uint64_t event_count(const SyncPolicy& policy, std::uint64_t steps) {
  if (steps <= 1) return 0;
  switch (policy.mode) {
    case SyncMode::Periodic: return (steps - 1) / policy.period;
    case SyncMode::Probabilistic: {
      if (policy.prob <= 0.0) return 0;
      const auto period = static_cast<std::uint64_t>(std::llround(1.0 / policy.prob));
      return period == 0 ? steps - 1 : (steps - 1) / period;
    }
    default: return 0;  // never / reset: no payload exchanged
  }
}

}  // namespace

std::uint64_t expected_payload_units(const SyncPolicySet& policies, std::uint64_t steps,
                                     std::uint32_t workers, std::size_t state_count) {
  if (workers <= 1) return 0;
  if (policies.accounting == PayloadAccounting::GradientAllreduce) {
    return event_count(policies.params, steps);
  }
  std::uint64_t total = event_count(policies.params, steps);
  if (state_count >= 1) total += event_count(policies.first_moment, steps);
  if (state_count >= 2) total += event_count(policies.second_moment, steps);
  return total;
}

}  // namespace desloc
