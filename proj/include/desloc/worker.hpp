#pragma once

#include <cstdint>

#include "desloc/optim.hpp"
#include "desloc/rng.hpp"
#include "desloc/vec.hpp"

namespace desloc {

// One simulated worker: parameters, optimizer state, and a private noise
// stream whose seed is a pure function of (run seed, worker id).
struct WorkerState {
  std::uint32_t id = 0;
  ParamVector x;
  OptimizerState opt;
  RngStream noise_stream;
  double sigma = 0.0;  // per-worker gradient-noise std
};

}  // namespace desloc
