#pragma once

#include <cstdint>
#include <vector>

#include "desloc/rng.hpp"
#include "desloc/vec.hpp"

namespace desloc {

enum class NoiseKind { IidGaussian, PerWorkerGaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::IidGaussian;
  // IidGaussian: the shared gradient-noise std.
  // PerWorkerGaussian: the std of the zero-mean draw whose absolute value
  // becomes each worker's noise std.
  double sigma = 0.0;
};

// Analytic objective with closed-form gradients; noise is injected by the
// simulator on top of the exact gradient.
class Objective {
 public:
  enum class Kind { Rosenbrock, Quadratic, HeterogeneousQuadratic };

  // Banana valley in 2-D: (1-x1)^2 + 100*(x2-x1^2)^2, optimum (1,1).
  static Objective rosenbrock(NoiseModel noise);

  // 0.5 * sum_i curvature_i * (x_i - center_i)^2, shared by all workers.
  static Objective quadratic(ParamVector center, ParamVector curvature, NoiseModel noise);

  // Same quadratic shape but worker m pulls toward center + its own offset,
  // drawn once per worker id from a seeded stream with std center_spread.
  // The joint optimum is the mean of the active workers' centers.
  static Objective heterogeneous_quadratic(ParamVector center, ParamVector curvature,
                                           double center_spread, NoiseModel noise);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const NoiseModel& noise() const { return noise_; }

  const ParamVector& default_start() const { return start_; }
  void set_start(ParamVector start);

  double value(std::uint32_t worker_id, const ParamVector& x) const;
  ParamVector gradient(std::uint32_t worker_id, const ParamVector& x) const;

  bool optimum_known() const { return kind_ != Kind::HeterogeneousQuadratic; }
  // For the heterogeneous case the optimum depends on the active worker set.
  ParamVector optimum(std::span<const std::uint32_t> active_workers = {}) const;

  // Worker-id keyed center for the heterogeneous case.
  ParamVector worker_center(std::uint32_t worker_id) const;

  void bind_seed(std::uint64_t run_seed) { run_seed_ = run_seed; }

 private:
  Kind kind_ = Kind::Rosenbrock;
  std::size_t dim_ = 2;
  NoiseModel noise_;
  ParamVector start_;
  ParamVector center_;
  ParamVector curvature_;
  double center_spread_ = 0.0;
  std::uint64_t run_seed_ = 0;
};

}  // namespace desloc
