#pragma once

#include <cmath>
#include <optional>

#include "desloc/sim.hpp"

namespace desloc::testing {

// Independent centralized momentum recursion driven by the per-step mean of
// the gradients the workers actually consumed: u' = beta*u + (1-beta)*g_bar,
// x' = x - eta*u'. Runs the simulation with an observer and returns the worst
// absolute per-coordinate deviation between the simulated cross-worker mean
// trajectory and this reference. The reference re-reads the means only at
// membership events (the worker set itself changes there) and otherwise
// evolves on its own.
inline double sgdm_mean_trajectory_deviation(const SimConfig& cfg) {
  const double beta = cfg.optimizer.beta1;
  double worst = 0.0;
  std::optional<ParamVector> ref_x, ref_u;

  const StepObserver observer = [&](const StepTrace& tr) {
    if (!ref_x || tr.membership_applied) {
      ref_x = tr.mean_x_pre;
      ref_u = tr.mean_u_pre;
    }
    const std::size_t dim = tr.mean_g_hat.size();
    ParamVector u_next(dim), x_next(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      u_next[i] = beta * (*ref_u)[i] + (1.0 - beta) * tr.mean_g_hat[i];
      x_next[i] = (*ref_x)[i] - tr.eta * u_next[i];
    }
    for (std::size_t i = 0; i < dim; ++i) {
      worst = std::max(worst, std::fabs(u_next[i] - tr.mean_u_post[i]));
      worst = std::max(worst, std::fabs(x_next[i] - tr.mean_x_post[i]));
    }
    ref_u = std::move(u_next);
    ref_x = std::move(x_next);
  };

  run(cfg, observer);
  return worst;
}

}  // namespace desloc::testing
