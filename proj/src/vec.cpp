#include "desloc/vec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace desloc {

namespace {

void check_same_dim(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
}

}  // namespace

ParamVector clip_coordinatewise(const ParamVector& g, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("clip radius must be positive");
  ParamVector out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g[i];
    out[i] = std::copysign(std::min(std::fabs(x), rho), x);
  }
  return out;
}

ParamVector clip_by_norm(const ParamVector& g, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("clip radius must be positive");
  const double n = l2_norm(g);
  if (n <= rho) return g;
  const double scale = rho / n;
  ParamVector out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * scale;
  return out;
}

namespace {

template <typename Access>
ParamVector mean_impl(std::size_t count, Access at) {
  if (count == 0) throw std::invalid_argument("mean over empty worker list");
  const ParamVector& first = at(0);
  const std::size_t dim = first.size();
  bool all_identical = true;
  for (std::size_t m = 1; m < count; ++m) {
    check_same_dim(first, at(m));
    if (all_identical && !(at(m) == first)) all_identical = false;
  }
  // Replicated inputs return the replica bit-exactly; this keeps repeated
  // averaging idempotent, which the sync layer's mean-preservation relies on.
  if (all_identical) return first;

  ParamVector out(dim);
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < dim; ++i) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t m = 0; m < count; ++m) {
      const double y = at(m)[i] - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    out[i] = sum * inv;
  }
  return out;
}

}  // namespace

ParamVector mean_across_workers(std::span<const ParamVector> vs) {
  return mean_impl(vs.size(), [&](std::size_t m) -> const ParamVector& { return vs[m]; });
}

ParamVector mean_across_workers(std::span<const ParamVector* const> vs) {
  return mean_impl(vs.size(), [&](std::size_t m) -> const ParamVector& { return *vs[m]; });
}

double l2_norm(const ParamVector& v) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) sum += v[i] * v[i];
  return std::sqrt(sum);
}

double linf_norm(const ParamVector& v) {
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) best = std::max(best, std::fabs(v[i]));
  return best;
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a, b);
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a, b);
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

ParamVector mul(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a, b);
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

ParamVector div(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a, b);
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] == 0.0) throw std::domain_error("division by zero coordinate");
    out[i] = a[i] / b[i];
  }
  return out;
}

ParamVector elementwise_sqrt(const ParamVector& a) {
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::sqrt(a[i]);
  return out;
}

ParamVector elementwise_max(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a, b);
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], b[i]);
  return out;
}

}  // namespace desloc
