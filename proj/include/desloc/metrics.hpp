#pragma once

#include <cstdint>
#include <optional>

#include "desloc/sync.hpp"
#include "desloc/vec.hpp"

namespace desloc {

// One recorded diagnostics row. Optional fields carry the distinguished
// undefined marker (empty CSV field, JSON null) when the quantity has no
// value at this step: unknown optimum, zero-norm denominator, or a bound
// whose hypothesis the configured optimizer does not satisfy.
struct MetricsRow {
  std::uint64_t step = 0;
  std::uint64_t round = 0;
  std::uint32_t worker_count = 0;
  double loss_mean = 0.0;
  double grad_norm_mean = 0.0;
  double param_norm_mean = 0.0;
  std::optional<double> dist_to_opt;
  std::optional<double> rel_change_u;
  std::optional<double> rel_change_v;
  std::optional<double> drift_u_observed;
  std::optional<double> drift_u_bound;
  std::optional<double> drift_v_observed;
  std::optional<double> drift_v_bound;
  std::uint64_t cum_payload_units = 0;
  double eta = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

// |s_now - s_prev|_2 / |s_prev|_2; undefined when the reference norm is zero.
std::optional<double> relative_rate_of_change(const ParamVector& s_prev,
                                              const ParamVector& s_now);

// Closed-form payload count for a run of T steps: one unit per averaged
// d-sized quantity per event, events at t = 0 excluded, nothing counted for a
// single worker. The every-step gradient-allreduce baseline ships one unit
// per step regardless of how many quantities its policies nominally touch.
// Probabilistic policies use their expected period 1/p.
std::uint64_t expected_payload_units(const SyncPolicySet& policies, std::uint64_t steps,
                                     std::uint32_t workers, std::size_t state_count);

}  // namespace desloc
