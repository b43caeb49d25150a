#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "desloc/metrics.hpp"
#include "desloc/objective.hpp"
#include "desloc/optim.hpp"
#include "desloc/sync.hpp"
#include "desloc/worker.hpp"

namespace desloc {

// Learning-rate schedule: constant, or warmup-stable-decay with a linear
// ramp and a 1-sqrt tail over the final decay_fraction of the run.
struct EtaSchedule {
  enum class Kind { Constant, Wsd };
  Kind kind = Kind::Constant;
  double eta_peak = 0.01;
  std::uint64_t warmup_steps = 0;   // Wsd only
  double decay_fraction = 0.0;      // Wsd only, fraction of total steps

  void validate(std::uint64_t total_steps) const;
};

double eta_at(std::uint64_t t, const EtaSchedule& schedule, std::uint64_t total_steps);

// Worker-addition event, applied at the step boundary before gradients.
struct MembershipEvent {
  enum class Init { MeanBroadcast, ReplicateWorkerZero };
  std::uint64_t step = 0;
  std::uint32_t add_workers = 1;
  Init init = Init::MeanBroadcast;
};

struct SimConfig {
  std::uint32_t workers = 1;
  std::uint64_t steps = 1;
  OptimizerSpec optimizer;
  EtaSchedule eta;
  SyncPolicySet policies;
  Objective objective = Objective::rosenbrock({});
  std::vector<MembershipEvent> events;
  std::uint64_t seed = 0;
  std::uint64_t record_every = 1;
  std::uint32_t threads = 1;
  // Override for the rate-of-change sampling window; defaults to each
  // quantity's own sync period.
  std::optional<std::uint64_t> rel_change_window;

  void validate() const;
};

// Per-step observation hook for tests and analysis. Means are cross-worker
// averages over the active worker set; "pre" values are taken after
// membership changes but before any averaging or update, "post" values after
// the step completes. For every quantity averaged this step, the means
// immediately before and after the averaging are captured as well.
struct StepTrace {
  std::uint64_t step = 0;
  double eta = 0.0;
  std::uint32_t worker_count = 0;
  bool membership_applied = false;
  ParamVector mean_x_pre;
  ParamVector mean_u_pre;
  ParamVector mean_g_hat;
  ParamVector mean_x_post;
  ParamVector mean_u_post;
  std::optional<ParamVector> sync_mean_before[kQuantityCount];
  std::optional<ParamVector> sync_mean_after[kQuantityCount];
};
using StepObserver = std::function<void(const StepTrace&)>;

struct DivergenceReport {
  std::uint64_t step = 0;
  std::string quantity;
  std::uint32_t worker = 0;
};

struct SimResult {
  std::vector<MetricsRow> rows;
  std::vector<WorkerState> workers;
  std::optional<DivergenceReport> divergence;
  std::uint64_t payload_units = 0;
  std::optional<double> final_dist_to_opt;
};

// Runs the multi-worker training loop: per step, resolve the collective sync
// decision, draw noise and clip gradients per worker, replace fired
// quantities by their cross-worker mean (or reset), apply the local optimizer
// update, then record metrics. Aborts early with a divergence report when any
// worker state turns non-finite.
SimResult run(const SimConfig& config, const StepObserver& observer = {});

}  // namespace desloc
