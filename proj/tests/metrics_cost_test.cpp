#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "desloc/costmodel.hpp"
#include "desloc/methods.hpp"
#include "desloc/metrics.hpp"

using namespace desloc;

TEST_CASE("relative rate of change") {
  const ParamVector a({1.0, 0.0});
  CHECK(relative_rate_of_change(a, a) == 0.0);
  CHECK(relative_rate_of_change(a, ParamVector({1.0, 1.0})) == 1.0);
  CHECK_FALSE(relative_rate_of_change(ParamVector({0.0, 0.0}), a).has_value());
  CHECK_THROWS_AS(relative_rate_of_change(ParamVector(2), ParamVector(3)),
                  std::invalid_argument);
}

TEST_CASE("closed-form payload counts") {
  const std::uint64_t T = 1537;
  const std::uint32_t M = 4;

  const std::uint64_t ddp = expected_payload_units(method_policies(MethodSpec::ddp()), T, M, 2);
  CHECK(ddp == 1536);

  const std::uint64_t local =
      expected_payload_units(method_policies(MethodSpec::local_adam(256)), T, M, 2);
  CHECK(local == 18);  // 3 * floor(1536/256)

  const std::uint64_t desync =
      expected_payload_units(method_policies(MethodSpec::des_loc(256, 768, 1536)), T, M, 2);
  CHECK(desync == 9);  // 6 + 2 + 1

  const std::uint64_t favg =
      expected_payload_units(method_policies(MethodSpec::favg_plus_opt(256)), T, M, 2);
  CHECK(favg == 6);
  // resetting states costs nothing extra over plain parameter averaging
  CHECK(expected_payload_units(method_policies(MethodSpec::favg_minus_opt(256)), T, M, 2) == 6);

  // ratio identities
  CHECK(ddp == 256 * favg);
  CHECK(ddp * 3 == 256 * local);
  CHECK(local == 2 * desync);

  // single worker exchanges nothing
  CHECK(expected_payload_units(method_policies(MethodSpec::ddp()), T, 1, 2) == 0);
}

TEST_CASE("compute-time model") {
  CostModelParams p;
  p.param_count = 1.7e9;
  p.tokens = 4e10;
  p.workers = 16;
  p.flops_per_s = 1e15;
  p.mfu = 0.4;

  // independent evaluation: 6*1.7e9*4e10 / (0.4*1e15*16)
  const long double want = 6.0L * 1.7e9L * 4e10L / (0.4L * 1e15L * 16.0L);
  CHECK(t_compute(p) == doctest::Approx(static_cast<double>(want)).epsilon(1e-14));

  CostModelParams doubled = p;
  doubled.workers = 32;
  CHECK(t_compute(doubled) == doctest::Approx(t_compute(p) / 2.0).epsilon(1e-14));

  CostModelParams unit;
  unit.param_count = 1.0;
  unit.tokens = 1.0;
  unit.workers = 1.0;
  unit.flops_per_s = 6.0;
  unit.mfu = 1.0;
  CHECK(t_compute(unit) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("ring collective time") {
  CostModelParams p;
  p.workers = 1.0;
  p.latency = 0.125;
  CHECK(t_ring(1e9, p) == doctest::Approx(0.125).epsilon(1e-15));

  p.workers = 4.0;
  p.latency = 0.0;
  p.bandwidth = 1e6;
  CHECK(t_ring(1e6, p) == doctest::Approx(1.5).epsilon(1e-15));

  // many-worker asymptote 2P/B + l
  p.workers = 1e9;
  p.latency = 0.01;
  CHECK(t_ring(1e6, p) == doctest::Approx(2.0 + 0.01).epsilon(1e-6));
}

TEST_CASE("per-method totals and reductions") {
  CostModelParams p;  // defaults describe the large-model setting
  const CostMethod desync = CostMethod::des_loc(256, 768, 1536);
  const CostMethod local = CostMethod::local_adam(256);
  const CostMethod favg = CostMethod::fedavg(256);

  CHECK(comm_reduction_vs_ddp(desync, p) == doctest::Approx(1536.0 / 9.0).epsilon(1e-12));
  CHECK(comm_reduction_vs_ddp(local, p) == doctest::Approx(256.0 / 3.0).epsilon(1e-12));
  CHECK(comm_reduction_vs_ddp(favg, p) == doctest::Approx(256.0).epsilon(1e-12));
  CHECK(comm_reduction_vs_ddp(desync, p) / comm_reduction_vs_ddp(local, p) ==
        doctest::Approx(2.0).epsilon(1e-12));

  // equal periods collapse to the all-states baseline
  CHECK(t_total(CostMethod::des_loc(64, 64, 64), p).total ==
        doctest::Approx(t_total(CostMethod::local_adam(64), p).total).epsilon(1e-14));

  // latency floor as bandwidth grows
  CostModelParams fast = p;
  fast.bandwidth = 1e30;
  const CostBreakdown b = t_total(local, fast);
  CHECK(b.comms == doctest::Approx(b.events * fast.latency).epsilon(1e-9));

  // monotone: longer periods never increase total time
  double prev = t_total(CostMethod::des_loc(16, 16, 16), p).total;
  for (double k : {32.0, 64.0, 128.0, 256.0}) {
    const double cur = t_total(CostMethod::des_loc(k, k, k), p).total;
    CHECK(cur <= prev);
    prev = cur;
  }
  // monotone: more parameters never decrease total time
  CostModelParams bigger = p;
  bigger.param_count *= 2;
  CHECK(t_total(local, bigger).total >= t_total(local, p).total);
}

TEST_CASE("utilization") {
  CostModelParams p;
  p.latency = 0.0;
  p.bandwidth = 1e30;
  CHECK(utilization(CostMethod::ddp(), p) == doctest::Approx(1.0).epsilon(1e-12));

  // comms == compute gives one half
  CostModelParams half;
  half.param_count = 1.0;
  half.tokens = 1.0;
  half.workers = 2.0;
  half.flops_per_s = 6.0;
  half.mfu = 1.0;
  half.steps = 1.0;
  half.latency = 0.0;
  // compute = 0.5 s; one event of 2*1/B*(1/2) = 1/B: pick B so comms = 0.5
  half.bandwidth = 2.0;
  CHECK(utilization(CostMethod::ddp(), half) == doctest::Approx(0.5).epsilon(1e-12));

  // across six decades of bandwidth the desynced method is never below the
  // all-states baseline, which is never below every-step sync
  CostModelParams sweep;
  for (int decade = 0; decade <= 6; ++decade) {
    sweep.bandwidth = 1e4 * std::pow(10.0, decade);
    const double u_desync = utilization(CostMethod::des_loc(256, 768, 1536), sweep);
    const double u_local = utilization(CostMethod::local_adam(256), sweep);
    const double u_ddp = utilization(CostMethod::ddp(), sweep);
    CHECK(u_desync >= u_local);
    CHECK(u_local >= u_ddp);
  }
}

TEST_CASE("bandwidth unit conversion") {
  CHECK(bandwidth_params_per_s(10.0, 4.0) == doctest::Approx(3.125e8).epsilon(1e-12));
  CHECK(bandwidth_params_per_s(8.0, 2.0) == doctest::Approx(5e8).epsilon(1e-12));
  CHECK_THROWS_AS(bandwidth_params_per_s(0.0, 4.0), std::invalid_argument);
}

TEST_CASE("overlap scales communication only") {
  CostModelParams p;
  CostModelParams overlapped = p;
  overlapped.overlap = 0.25;
  const CostBreakdown full = t_total(CostMethod::local_adam(64), p);
  const CostBreakdown part = t_total(CostMethod::local_adam(64), overlapped);
  CHECK(part.compute == full.compute);
  CHECK(part.comms == doctest::Approx(full.comms * 0.25).epsilon(1e-12));
}
