#include "desloc/optim.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace desloc {

void OptimizerSpec::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0,1)");
  if (kind != OptimizerKind::Sgdm && !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("beta2 must be in [0,1)");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  if (kind == OptimizerKind::Adopt && !(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (clip.mode != ClipMode::None && !(clip.rho > 0.0)) {
    throw std::invalid_argument("clip radius must be positive when clipping is enabled");
  }
  if (amsgrad && kind == OptimizerKind::Sgdm) {
    throw std::invalid_argument("running-max variant requires a second moment");
  }
}

void TheoryParams::validate() const {
  if (!(smoothness > 0.0)) throw std::invalid_argument("smoothness constant must be positive");
  if (!(b2 >= 1.0)) throw std::invalid_argument("heterogeneity slope bound must be >= 1");
  if (!(g2 >= 0.0)) throw std::invalid_argument("heterogeneity offset bound must be >= 0");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise std must be >= 0");
}

OptimizerState OptimizerState::zeros(std::size_t dim, const OptimizerSpec& spec) {
  OptimizerState s;
  s.u = ParamVector(dim);
  if (spec.kind != OptimizerKind::Sgdm) {
    s.v = ParamVector(dim);
    if (spec.amsgrad) s.v_tilde = ParamVector(dim);
  }
  return s;
}

namespace {

void check_dim(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
}

}  // namespace

OptimizerState adam_update_states(const OptimizerState& state, const ParamVector& g_hat,
                                  const OptimizerSpec& spec) {
  check_dim(state.u, g_hat);
  if (!state.v) throw std::invalid_argument("second moment missing");
  OptimizerState out = state;
  const double b1 = spec.beta1, b2 = spec.beta2;
  for (std::size_t i = 0; i < g_hat.size(); ++i) {
    const double g = g_hat[i];
    out.u[i] = b1 * state.u[i] + (1.0 - b1) * g;
    (*out.v)[i] = b2 * (*state.v)[i] + (1.0 - b2) * g * g;
  }
  if (spec.amsgrad) {
    if (!state.v_tilde) throw std::invalid_argument("running max missing");
    out.v_tilde = elementwise_max(*out.v, *state.v_tilde);
  }
  return out;
}

ParamVector adam_param_step(const ParamVector& x, const OptimizerState& state, double eta,
                            const OptimizerSpec& spec) {
  check_dim(x, state.u);
  if (!state.v) throw std::invalid_argument("second moment missing");
  const ParamVector& v_eff = spec.amsgrad ? *state.v_tilde : *state.v;
  const double lambda_sq = spec.lambda * spec.lambda;
  ParamVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double denom_sq = v_eff[i] + lambda_sq;
    if (denom_sq <= 0.0) throw std::domain_error("zero step denominator; set lambda > 0");
    out[i] = x[i] - eta / std::sqrt(denom_sq) * state.u[i];
  }
  return out;
}

std::pair<ParamVector, OptimizerState> adopt_update(const ParamVector& x,
                                                    const OptimizerState& state,
                                                    const ParamVector& g_hat, double eta,
                                                    const OptimizerSpec& spec) {
  check_dim(x, g_hat);
  check_dim(state.u, g_hat);
  if (!state.v) throw std::invalid_argument("second moment missing");
  if (!(spec.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");

  OptimizerState next = state;
  ParamVector x_next(x.size());
  const double b1 = spec.beta1, b2 = spec.beta2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = g_hat[i];
    const double v_prev = (*state.v)[i];
    (*next.v)[i] = b2 * v_prev + (1.0 - b2) * g * g;
    const double norm = std::max(std::sqrt(v_prev), spec.epsilon);
    next.u[i] = b1 * state.u[i] + (1.0 - b1) * g / norm;
    x_next[i] = x[i] - eta * next.u[i];
  }
  return {std::move(x_next), std::move(next)};
}

std::pair<ParamVector, OptimizerState> sgdm_update(const ParamVector& x,
                                                   const OptimizerState& state,
                                                   const ParamVector& g, double eta,
                                                   double beta) {
  check_dim(x, g);
  check_dim(state.u, g);
  OptimizerState next = state;
  ParamVector x_next(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    next.u[i] = beta * state.u[i] + (1.0 - beta) * g[i];
    x_next[i] = x[i] - eta * next.u[i];
  }
  return {std::move(x_next), std::move(next)};
}

double half_life(double beta, double psi_frac) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must be in (0,1)");
  if (!(psi_frac > 0.0 && psi_frac < 1.0)) throw std::domain_error("psi_frac must be in (0,1)");
  return std::log(psi_frac) / std::log(beta);
}

double drift_bound_first(double rho, double beta1, std::uint64_t k) {
  if (!(rho > 0.0)) throw std::domain_error("rho must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::domain_error("beta1 must be in [0,1)");
  return 2.0 * rho * (1.0 - std::pow(beta1, static_cast<double>(k)));
}

double drift_bound_second(double rho, double beta2, std::uint64_t k) {
  if (!(rho > 0.0)) throw std::domain_error("rho must be positive");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::domain_error("beta2 must be in [0,1)");
  return 2.0 * rho * rho * (1.0 - std::pow(beta2, static_cast<double>(k)));
}

double psi(double p_x, double p_u, double beta) {
  if (!(p_x > 0.0 && p_x <= 1.0)) {
    throw std::domain_error("p_x must be in (0,1]; the divergence term is unbounded at 0");
  }
  if (!(p_u >= 0.0 && p_u <= 1.0)) throw std::domain_error("p_u must be in [0,1]");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("beta must be in [0,1)");
  const double part_x = 4.0 * (1.0 - p_x) / (p_x * p_x);
  const double part_u = (1.0 - beta) * (1.0 - p_u) / (1.0 - (1.0 - p_u) * beta);
  return part_x * part_u;
}

double eta0(double smoothness, double beta, double b2, double psi_val) {
  if (!(smoothness > 0.0)) throw std::domain_error("smoothness constant must be positive");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("beta must be in [0,1)");
  if (!(psi_val >= 0.0)) throw std::domain_error("psi must be non-negative");
  const double scaled = psi_val * std::max(1.0, b2 - 1.0);
  const double second = scaled > 0.0 ? 1.0 / (6.0 * std::sqrt(scaled))
                                     : std::numeric_limits<double>::infinity();
  return std::min(1.0 - beta, second) / (4.0 * smoothness);
}

double eta0(const TheoryParams& theory, double beta, double psi_val) {
  theory.validate();
  return eta0(theory.smoothness, beta, theory.b2, psi_val);
}

std::uint64_t k_lcm(std::span<const std::uint64_t> periods) {
  if (periods.empty()) throw std::invalid_argument("no sync periods given");
  std::uint64_t acc = 1;
  for (std::uint64_t p : periods) {
    if (p == 0) throw std::invalid_argument("sync period must be positive");
    const std::uint64_t g = std::gcd(acc, p);
    const std::uint64_t q = acc / g;
    if (p > std::numeric_limits<std::uint64_t>::max() / q) {
      throw std::invalid_argument("least common multiple overflows");
    }
    acc = q * p;
  }
  return acc;
}

}  // namespace desloc
