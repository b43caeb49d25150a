#include "desloc/sync.hpp"

#include <stdexcept>

namespace desloc {

void SyncPolicy::validate() const {
  switch (mode) {
    case SyncMode::Periodic:
      if (period == 0) throw std::invalid_argument("sync period must be >= 1");
      break;
    case SyncMode::Probabilistic:
      if (!(prob >= 0.0 && prob <= 1.0)) {
        throw std::invalid_argument("sync probability must be in [0,1]");
      }
      break;
    default:
      break;
  }
}

void SyncPolicySet::validate() const {
  params.validate();
  first_moment.validate();
  second_moment.validate();
  if (params.mode == SyncMode::ResetWithParams) {
    throw std::invalid_argument("params policy cannot be reset_with_params");
  }
  if (params.mode == SyncMode::Never ||
      (params.mode == SyncMode::Probabilistic && params.prob == 0.0)) {
    throw std::invalid_argument(
        "params must synchronize eventually (p_x = 0 makes the divergence term unbounded)");
  }
}

bool should_sync(std::uint64_t t, const SyncPolicy& policy, RngStream& coin,
                 bool params_fired) {
  switch (policy.mode) {
    case SyncMode::Periodic: return t % policy.period == 0;
    case SyncMode::Probabilistic: return coin.bernoulli(policy.prob);
    case SyncMode::Never: return false;
    case SyncMode::ResetWithParams: return params_fired;
  }
  return false;
}

SyncScheduler::SyncScheduler(std::uint64_t run_seed, const SyncPolicySet& policies)
    : policies_(policies) {
  policies_.validate();
  for (std::size_t q = 0; q < kQuantityCount; ++q) {
    coins_[q] = RngStream::keyed(run_seed, StreamDomain::SyncSchedule, q);
  }
}

SyncDecision SyncScheduler::decide(std::uint64_t t) {
  SyncDecision d;
  d.step = t;
  d.fired[0] = should_sync(t, policies_.params, coins_[0]);
  for (std::size_t q = 1; q < kQuantityCount; ++q) {
    d.fired[q] =
        should_sync(t, policies_.for_quantity(static_cast<Quantity>(q)), coins_[q], d.fired[0]);
  }
  return d;
}

namespace {

// Collects one quantity across workers, averages, and writes the mean back.
template <typename Get>
void average_quantity(std::vector<WorkerState>& workers, Get get) {
  std::vector<const ParamVector*> views;
  views.reserve(workers.size());
  for (const WorkerState& w : workers) views.push_back(get(const_cast<WorkerState&>(w)));
  const ParamVector mean = mean_across_workers(std::span<const ParamVector* const>(views));
  for (WorkerState& w : workers) *get(w) = mean;
}

template <typename Get>
void zero_quantity(std::vector<WorkerState>& workers, Get get) {
  for (WorkerState& w : workers) {
    ParamVector* v = get(w);
    *v = ParamVector(v->size());
  }
}

}  // namespace

ApplySyncResult apply_sync(std::vector<WorkerState>& workers, const SyncDecision& decision,
                           const SyncPolicySet& policies) {
  if (workers.empty()) throw std::invalid_argument("no workers");
  const std::size_t dim = workers.front().x.size();
  for (const WorkerState& w : workers) {
    if (w.x.size() != dim || w.opt.u.size() != dim ||
        (w.opt.v && w.opt.v->size() != dim) ||
        workers.front().opt.v.has_value() != w.opt.v.has_value()) {
      throw std::invalid_argument("worker state layout mismatch");
    }
  }

  ApplySyncResult result;
  std::uint64_t averaged = 0;
  for (std::size_t q = 0; q < kQuantityCount; ++q) {
    if (!decision.fired[q]) continue;
    const Quantity quantity = static_cast<Quantity>(q);
    auto get = [quantity](WorkerState& w) -> ParamVector* {
      switch (quantity) {
        case Quantity::Params: return &w.x;
        case Quantity::FirstMoment: return &w.opt.u;
        default: return w.opt.v ? &*w.opt.v : nullptr;
      }
    };
    if (get(workers.front()) == nullptr) continue;  // optimizer has no such state

    if (policies.for_quantity(quantity).mode == SyncMode::ResetWithParams) {
      zero_quantity(workers, get);
      if (quantity == Quantity::SecondMoment) {
        // The running max belongs to the second moment's state.
        for (WorkerState& w : workers) {
          if (w.opt.v_tilde) *w.opt.v_tilde = ParamVector(w.opt.v_tilde->size());
        }
      }
    } else {
      average_quantity(workers, get);
      ++averaged;
    }
  }

  if (decision.step > 0 && workers.size() > 1 && averaged > 0) {
    result.payload_units = policies.accounting == PayloadAccounting::GradientAllreduce
                               ? 1
                               : averaged;
  }
  return result;
}

}  // namespace desloc
