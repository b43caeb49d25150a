#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

#include "desloc/vec.hpp"

namespace desloc {

enum class OptimizerKind { Sgdm, Adam, Adopt };

enum class ClipMode { None, Coordinatewise, ByNorm };

struct ClipConfig {
  ClipMode mode = ClipMode::Coordinatewise;
  double rho = 1.0;
};

// Optimizer hyper-parameters shared by every worker of a run.
struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.95;
  double beta2 = 0.95;    // ignored for SGDM
  double lambda = 1e-8;   // additive l2 stability term inside Adam's sqrt
  double epsilon = 1e-6;  // ADOPT's lower bound on the normalizer
  bool amsgrad = false;
  ClipConfig clip;

  // Throws std::invalid_argument on violated ranges.
  void validate() const;

  std::size_t state_count() const { return kind == OptimizerKind::Sgdm ? 1 : 2; }
};

// Per-worker optimizer state. v is absent for SGDM; v_tilde present only for
// the running-max variant, where it is coordinate-wise non-decreasing.
struct OptimizerState {
  ParamVector u;
  std::optional<ParamVector> v;
  std::optional<ParamVector> v_tilde;

  static OptimizerState zeros(std::size_t dim, const OptimizerSpec& spec);
};

// Problem-structure constants used by the step-size advisors.
struct TheoryParams {
  double smoothness = 1.0;      // L
  double b2 = 1.0;              // gradient-heterogeneity slope bound
  double g2 = 0.0;              // gradient-heterogeneity offset bound
  double noise_sigma = 0.0;

  void validate() const;
};

// u' = b1*u + (1-b1)*g, v' = b2*v + (1-b2)*g*g; running max refreshed when
// enabled. g is expected to be already clipped.
OptimizerState adam_update_states(const OptimizerState& state, const ParamVector& g_hat,
                                  const OptimizerSpec& spec);

// x' = x - eta / sqrt(v_eff + lambda^2) * u, with v_eff the running max when
// enabled, else v. Throws std::domain_error when lambda == 0 and some v
// coordinate is zero.
ParamVector adam_param_step(const ParamVector& x, const OptimizerState& state, double eta,
                            const OptimizerSpec& spec);

// v' = b2*v + (1-b2)*g*g; u' = b1*u + (1-b1) * g / max(sqrt(v_prev), eps);
// x' = x - eta*u'. The normalizer reads the pre-update v.
std::pair<ParamVector, OptimizerState> adopt_update(const ParamVector& x,
                                                    const OptimizerState& state,
                                                    const ParamVector& g_hat, double eta,
                                                    const OptimizerSpec& spec);

// u' = beta*u + (1-beta)*g; x' = x - eta*u'.
std::pair<ParamVector, OptimizerState> sgdm_update(const ParamVector& x,
                                                   const OptimizerState& state,
                                                   const ParamVector& g, double eta,
                                                   double beta);

// Steps until an exponential moving average's weight on old information decays
// to psi_frac: ln(psi_frac) / ln(beta). Throws std::domain_error outside (0,1).
double half_life(double beta, double psi_frac = 0.5);

// Max-norm caps on how far the moments can move over k uninterrupted local
// steps under clipping at radius rho: 2*rho*(1-b1^k) and 2*rho^2*(1-b2^k).
double drift_bound_first(double rho, double beta1, std::uint64_t k);
double drift_bound_second(double rho, double beta2, std::uint64_t k);

// Divergence-control term of the decoupled-sync step-size rule:
// 4(1-p_x)/p_x^2 * (1-beta)(1-p_u) / (1-(1-p_u)beta).
// Throws std::domain_error when p_x == 0 (the term is unbounded there).
double psi(double p_x, double p_u, double beta);

// Step-size ceiling (1/4L) * min(1-beta, 1/(6*sqrt(psi*max(1,B^2-1)))).
// With psi == 0 the second argument is +inf, so the result is (1-beta)/(4L).
// Advisory only: the simulator never overrides a user-chosen step size.
double eta0(double smoothness, double beta, double b2, double psi_val);
double eta0(const TheoryParams& theory, double beta, double psi_val);

// Least common multiple of the sync periods; full synchronization happens
// exactly at multiples of the result. Throws std::invalid_argument on an
// empty list or a zero period.
std::uint64_t k_lcm(std::span<const std::uint64_t> periods);

}  // namespace desloc
