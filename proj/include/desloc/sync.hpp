#pragma once

#include <cstdint>
#include <vector>

#include "desloc/rng.hpp"
#include "desloc/worker.hpp"

namespace desloc {

enum class SyncMode { Periodic, Probabilistic, Never, ResetWithParams };

// Synchronization rule for one quantity (parameters or one optimizer state).
struct SyncPolicy {
  SyncMode mode = SyncMode::Never;
  std::uint64_t period = 1;  // Periodic
  double prob = 0.0;         // Probabilistic

  static SyncPolicy periodic(std::uint64_t k) { return {SyncMode::Periodic, k, 0.0}; }
  static SyncPolicy probabilistic(double p) { return {SyncMode::Probabilistic, 1, p}; }
  static SyncPolicy never() { return {SyncMode::Never, 1, 0.0}; }
  static SyncPolicy reset_with_params() { return {SyncMode::ResetWithParams, 1, 0.0}; }

  void validate() const;
};

// Quantities a policy can apply to, in reporting order.
enum class Quantity : std::size_t { Params = 0, FirstMoment = 1, SecondMoment = 2 };
inline constexpr std::size_t kQuantityCount = 3;

// How synced payload translates into communication units. Every-step
// data-parallel training ships one gradient-sized payload per step rather
// than one per quantity, so its baseline gets dedicated accounting.
enum class PayloadAccounting { PerQuantity, GradientAllreduce };

// One policy per synchronized quantity. The second-moment policy is ignored
// for optimizers without a second moment.
struct SyncPolicySet {
  SyncPolicy params = SyncPolicy::periodic(1);
  SyncPolicy first_moment = SyncPolicy::never();
  SyncPolicy second_moment = SyncPolicy::never();
  PayloadAccounting accounting = PayloadAccounting::PerQuantity;

  const SyncPolicy& for_quantity(Quantity q) const {
    switch (q) {
      case Quantity::Params: return params;
      case Quantity::FirstMoment: return first_moment;
      default: return second_moment;
    }
  }
  void validate() const;
};

// Collective per-step outcome: identical for every worker.
struct SyncDecision {
  std::uint64_t step = 0;
  bool fired[kQuantityCount] = {false, false, false};

  bool any() const { return fired[0] || fired[1] || fired[2]; }
};

// Single-policy decision. Periodic fires at t % K == 0; probabilistic draws
// one Bernoulli(p) from the shared schedule stream; never is false;
// reset-with-params mirrors the params decision passed in.
bool should_sync(std::uint64_t t, const SyncPolicy& policy, RngStream& coin,
                 bool params_fired = false);

// Per-quantity coin streams keyed by (run seed, quantity id). Shared by all
// workers so decisions stay collective.
class SyncScheduler {
 public:
  SyncScheduler(std::uint64_t run_seed, const SyncPolicySet& policies);

  SyncDecision decide(std::uint64_t t);

  const SyncPolicySet& policies() const { return policies_; }

 private:
  SyncPolicySet policies_;
  RngStream coins_[kQuantityCount];
};

struct ApplySyncResult {
  std::uint64_t payload_units = 0;  // d-sized payloads exchanged at this event
};

// Replaces each fired quantity on every worker with the cross-worker mean
// (reset-with-params quantities are zeroed instead), before the step's local
// update consumes it. Averaging is mean-preserving by construction; resets
// are local and exchange no payload. Payload counts only averaged quantities,
// only for t > 0 and more than one worker.
ApplySyncResult apply_sync(std::vector<WorkerState>& workers, const SyncDecision& decision,
                           const SyncPolicySet& policies);

}  // namespace desloc
