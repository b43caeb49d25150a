#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace desloc {

// Dense real vector of fixed dimension. Holds model coordinates, gradients,
// and optimizer moments. The dimension is set at construction and never
// changes; all library operations keep entries finite for finite inputs.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim) : values_(dim, 0.0) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool operator==(const ParamVector& other) const = default;

 private:
  std::vector<double> values_;
};

// sign(g_i) * min(|g_i|, rho) per coordinate; the result has max-norm <= rho.
// Throws std::invalid_argument for rho <= 0.
ParamVector clip_coordinatewise(const ParamVector& g, double rho);

// g * min(1, rho / |g|_2); identity when already inside the ball, zero stays
// zero. Throws std::invalid_argument for rho <= 0.
ParamVector clip_by_norm(const ParamVector& g, double rho);

// Coordinate-wise arithmetic mean over workers. Summation is sequential in
// ascending worker index with Kahan compensation, so the result is
// bit-identical across runs and thread counts. Bitwise-replicated inputs
// return the replica unchanged, which makes averaging exactly idempotent.
// Throws std::invalid_argument on an empty list or mismatched dimensions.
ParamVector mean_across_workers(std::span<const ParamVector> vs);
ParamVector mean_across_workers(std::span<const ParamVector* const> vs);

double l2_norm(const ParamVector& v);
double linf_norm(const ParamVector& v);

ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector sub(const ParamVector& a, const ParamVector& b);
ParamVector mul(const ParamVector& a, const ParamVector& b);
// Throws std::domain_error when some b coordinate is zero.
ParamVector div(const ParamVector& a, const ParamVector& b);
ParamVector elementwise_sqrt(const ParamVector& a);
ParamVector elementwise_max(const ParamVector& a, const ParamVector& b);

}  // namespace desloc
