#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace desloc {

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d49bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable identifiers for the independent random streams of one run.
enum class StreamDomain : std::uint64_t {
  WorkerNoise = 1,   // per-worker gradient noise, index = worker id
  SyncSchedule = 2,  // per-quantity probabilistic sync coins, index = quantity id
  WorkerSigma = 3,   // per-worker noise std draws, index = worker id
  HetCenter = 4,     // per-worker objective centers, index = worker id
};

// Seed for the stream (run_seed, domain, index). Pure function of its inputs,
// so worker streams survive membership changes and re-runs untouched.
inline std::uint64_t stream_seed(std::uint64_t run_seed, StreamDomain domain,
                                 std::uint64_t index) {
  return mix64(mix64(mix64(run_seed) ^ static_cast<std::uint64_t>(domain)) ^ index);
}

// Deterministic random stream. The engine (mt19937_64) and all derived draws
// are fully specified, so sequences are identical across platforms and builds.
// Gaussian draws use Box-Muller without caching: every call consumes exactly
// two engine outputs, keeping the stream position a pure function of the
// number of calls.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream keyed(std::uint64_t run_seed, StreamDomain domain,
                         std::uint64_t index) {
    return RngStream(stream_seed(run_seed, domain, index));
  }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open_low() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double gaussian() {
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace desloc
