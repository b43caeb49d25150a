#include "desloc/objective.hpp"

#include <stdexcept>

namespace desloc {

Objective Objective::rosenbrock(NoiseModel noise) {
  Objective o;
  o.kind_ = Kind::Rosenbrock;
  o.dim_ = 2;
  o.noise_ = noise;
  o.start_ = ParamVector({-1.2, 1.0});
  return o;
}

Objective Objective::quadratic(ParamVector center, ParamVector curvature, NoiseModel noise) {
  if (center.size() != curvature.size() || center.size() == 0) {
    throw std::invalid_argument("center and curvature must share a positive dimension");
  }
  for (std::size_t i = 0; i < curvature.size(); ++i) {
    if (!(curvature[i] > 0.0)) throw std::invalid_argument("curvature must be positive");
  }
  Objective o;
  o.kind_ = Kind::Quadratic;
  o.dim_ = center.size();
  o.noise_ = noise;
  o.start_ = ParamVector(o.dim_);
  o.center_ = std::move(center);
  o.curvature_ = std::move(curvature);
  return o;
}

Objective Objective::heterogeneous_quadratic(ParamVector center, ParamVector curvature,
                                             double center_spread, NoiseModel noise) {
  Objective o = quadratic(std::move(center), std::move(curvature), noise);
  if (!(center_spread >= 0.0)) throw std::invalid_argument("center spread must be >= 0");
  o.kind_ = Kind::HeterogeneousQuadratic;
  o.center_spread_ = center_spread;
  return o;
}

void Objective::set_start(ParamVector start) {
  if (start.size() != dim_) throw std::invalid_argument("start point dimension mismatch");
  start_ = std::move(start);
}

ParamVector Objective::worker_center(std::uint32_t worker_id) const {
  ParamVector c = center_;
  if (kind_ == Kind::HeterogeneousQuadratic && center_spread_ > 0.0) {
    RngStream stream = RngStream::keyed(run_seed_, StreamDomain::HetCenter, worker_id);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += center_spread_ * stream.gaussian();
  }
  return c;
}

double Objective::value(std::uint32_t worker_id, const ParamVector& x) const {
  switch (kind_) {
    case Kind::Rosenbrock: {
      const double a = 1.0 - x[0];
      const double b = x[1] - x[0] * x[0];
      return a * a + 100.0 * b * b;
    }
    case Kind::Quadratic:
    case Kind::HeterogeneousQuadratic: {
      const ParamVector c = kind_ == Kind::Quadratic ? center_ : worker_center(worker_id);
      double sum = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - c[i];
        sum += 0.5 * curvature_[i] * d * d;
      }
      return sum;
    }
  }
  return 0.0;
}

ParamVector Objective::gradient(std::uint32_t worker_id, const ParamVector& x) const {
  ParamVector g(dim_);
  switch (kind_) {
    case Kind::Rosenbrock: {
      const double b = x[1] - x[0] * x[0];
      g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
      g[1] = 200.0 * b;
      break;
    }
    case Kind::Quadratic:
    case Kind::HeterogeneousQuadratic: {
      const ParamVector c = kind_ == Kind::Quadratic ? center_ : worker_center(worker_id);
      for (std::size_t i = 0; i < dim_; ++i) g[i] = curvature_[i] * (x[i] - c[i]);
      break;
    }
  }
  return g;
}

ParamVector Objective::optimum(std::span<const std::uint32_t> active_workers) const {
  switch (kind_) {
    case Kind::Rosenbrock: return ParamVector({1.0, 1.0});
    case Kind::Quadratic: return center_;
    case Kind::HeterogeneousQuadratic: {
      if (active_workers.empty()) {
        throw std::invalid_argument("heterogeneous optimum needs the active worker set");
      }
      std::vector<ParamVector> centers;
      centers.reserve(active_workers.size());
      for (std::uint32_t id : active_workers) centers.push_back(worker_center(id));
      return mean_across_workers(std::span<const ParamVector>(centers));
    }
  }
  return center_;
}

}  // namespace desloc
