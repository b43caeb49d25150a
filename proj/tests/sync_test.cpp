#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "desloc/sync.hpp"

using namespace desloc;

namespace {

WorkerState make_worker(std::uint32_t id, ParamVector x, ParamVector u, ParamVector v) {
  WorkerState w;
  w.id = id;
  w.x = std::move(x);
  w.opt.u = std::move(u);
  w.opt.v = std::move(v);
  return w;
}

SyncDecision fire(std::uint64_t step, bool params, bool first, bool second) {
  SyncDecision d;
  d.step = step;
  d.fired[0] = params;
  d.fired[1] = first;
  d.fired[2] = second;
  return d;
}

}  // namespace

TEST_CASE("periodic decisions") {
  RngStream coin(1);
  const SyncPolicy p = SyncPolicy::periodic(256);
  CHECK(should_sync(0, p, coin));
  CHECK(should_sync(512, p, coin));
  CHECK_FALSE(should_sync(257, p, coin));
  CHECK_FALSE(should_sync(255, p, coin));
  CHECK_FALSE(should_sync(100, SyncPolicy::never(), coin));
  CHECK(should_sync(100, SyncPolicy::reset_with_params(), coin, true));
  CHECK_FALSE(should_sync(100, SyncPolicy::reset_with_params(), coin, false));
}

TEST_CASE("probabilistic firing rate matches the binomial model") {
  const double p = 1.0 / 192.0;
  RngStream coin = RngStream::keyed(7, StreamDomain::SyncSchedule, 0);
  const std::uint64_t steps = 1000000;
  std::uint64_t fired = 0;
  const SyncPolicy policy = SyncPolicy::probabilistic(p);
  for (std::uint64_t t = 0; t < steps; ++t) {
    if (should_sync(t, policy, coin)) ++fired;
  }
  const double expected = steps * p;
  const double stderr_count = std::sqrt(steps * p * (1.0 - p));
  CHECK(std::fabs(static_cast<double>(fired) - expected) <= 3.0 * stderr_count);
}

TEST_CASE("probabilistic and periodic schedules share the mean inter-sync gap") {
  const std::uint64_t K = 64;
  RngStream coin = RngStream::keyed(13, StreamDomain::SyncSchedule, 1);
  const SyncPolicy policy = SyncPolicy::probabilistic(1.0 / static_cast<double>(K));
  const std::uint64_t steps = 400000;
  std::vector<std::uint64_t> gaps;
  std::uint64_t last = 0;
  for (std::uint64_t t = 1; t < steps; ++t) {
    if (should_sync(t, policy, coin)) {
      gaps.push_back(t - last);
      last = t;
    }
  }
  double mean_gap = 0.0;
  for (std::uint64_t g : gaps) mean_gap += static_cast<double>(g);
  mean_gap /= static_cast<double>(gaps.size());
  // geometric gaps: std == K*sqrt(1-p) ~ K; allow 4 standard errors
  const double tol = 4.0 * static_cast<double>(K) / std::sqrt(static_cast<double>(gaps.size()));
  CHECK(std::fabs(mean_gap - static_cast<double>(K)) <= tol);
}

TEST_CASE("scheduler decisions are collective and reproducible") {
  SyncPolicySet set;
  set.params = SyncPolicy::probabilistic(0.25);
  set.first_moment = SyncPolicy::probabilistic(0.1);
  set.second_moment = SyncPolicy::reset_with_params();
  SyncScheduler a(99, set), b(99, set);
  for (std::uint64_t t = 0; t < 2000; ++t) {
    const SyncDecision da = a.decide(t);
    const SyncDecision db = b.decide(t);
    CHECK(da.fired[0] == db.fired[0]);
    CHECK(da.fired[1] == db.fired[1]);
    CHECK(da.fired[2] == db.fired[2]);
    // reset mirrors the params decision
    CHECK(da.fired[2] == da.fired[0]);
  }
}

TEST_CASE("averaging replaces fired quantities with the cross-worker mean") {
  std::vector<WorkerState> ws;
  ws.push_back(make_worker(0, ParamVector({0.0, 0.0}), ParamVector({1.0, 0.0}),
                           ParamVector({0.5, 0.5})));
  ws.push_back(make_worker(1, ParamVector({2.0, 2.0}), ParamVector({3.0, 2.0}),
                           ParamVector({1.5, 0.5})));

  SyncPolicySet set;
  set.params = SyncPolicy::periodic(1);
  set.first_moment = SyncPolicy::periodic(1);
  set.second_moment = SyncPolicy::periodic(1);

  const ApplySyncResult r = apply_sync(ws, fire(10, true, false, false), set);
  CHECK(ws[0].x == ParamVector({1.0, 1.0}));
  CHECK(ws[1].x == ParamVector({1.0, 1.0}));
  CHECK(ws[0].opt.u == ParamVector({1.0, 0.0}));  // untouched
  CHECK(r.payload_units == 1);
}

TEST_CASE("payload accounting rules") {
  SyncPolicySet set;
  set.params = SyncPolicy::periodic(1);
  set.first_moment = SyncPolicy::periodic(1);
  set.second_moment = SyncPolicy::periodic(1);

  std::vector<WorkerState> ws;
  ws.push_back(make_worker(0, ParamVector({1.0}), ParamVector({1.0}), ParamVector({1.0})));
  ws.push_back(make_worker(1, ParamVector({1.0}), ParamVector({1.0}), ParamVector({1.0})));

  // identical replicas: value no-op, still counted when t > 0
  CHECK(apply_sync(ws, fire(5, true, true, true), set).payload_units == 3);
  // events at t = 0 are applied but not charged
  CHECK(apply_sync(ws, fire(0, true, true, true), set).payload_units == 0);

  // single worker: no exchange
  std::vector<WorkerState> solo;
  solo.push_back(make_worker(0, ParamVector({1.0}), ParamVector({1.0}), ParamVector({1.0})));
  CHECK(apply_sync(solo, fire(5, true, true, true), set).payload_units == 0);

  // every-step gradient allreduce ships one unit per step
  set.accounting = PayloadAccounting::GradientAllreduce;
  CHECK(apply_sync(ws, fire(5, true, true, true), set).payload_units == 1);
}

TEST_CASE("state resets zero the moments and exchange nothing") {
  SyncPolicySet set;
  set.params = SyncPolicy::periodic(4);
  set.first_moment = SyncPolicy::reset_with_params();
  set.second_moment = SyncPolicy::reset_with_params();

  std::vector<WorkerState> ws;
  ws.push_back(make_worker(0, ParamVector({0.0}), ParamVector({1.0}), ParamVector({2.0})));
  ws.push_back(make_worker(1, ParamVector({4.0}), ParamVector({3.0}), ParamVector({4.0})));

  const ApplySyncResult r = apply_sync(ws, fire(8, true, true, true), set);
  CHECK(ws[0].x == ParamVector({2.0}));
  CHECK(ws[0].opt.u == ParamVector({0.0}));
  CHECK(*ws[0].opt.v == ParamVector({0.0}));
  CHECK(ws[1].opt.u == ParamVector({0.0}));
  CHECK(r.payload_units == 1);  // params only; resets are local
}

TEST_CASE("averaging preserves the cross-worker mean bit-exactly") {
  RngStream rng(77);
  std::vector<WorkerState> ws;
  for (std::uint32_t m = 0; m < 5; ++m) {
    ParamVector x(3), u(3), v(3);
    for (int i = 0; i < 3; ++i) {
      x[i] = rng.gaussian() * 0.1;  // awkward decimals on purpose
      u[i] = rng.gaussian();
      v[i] = std::fabs(rng.gaussian());
    }
    ws.push_back(make_worker(m, x, u, v));
  }

  SyncPolicySet set;
  set.params = SyncPolicy::periodic(1);
  set.first_moment = SyncPolicy::periodic(1);
  set.second_moment = SyncPolicy::periodic(1);

  const auto collect = [&](auto get) {
    std::vector<ParamVector> out;
    for (const WorkerState& w : ws) out.push_back(get(w));
    return out;
  };
  const auto xs = collect([](const WorkerState& w) { return w.x; });
  const auto us = collect([](const WorkerState& w) { return w.opt.u; });
  const ParamVector mean_x_before = mean_across_workers(std::span<const ParamVector>(xs));
  const ParamVector mean_u_before = mean_across_workers(std::span<const ParamVector>(us));

  apply_sync(ws, fire(3, true, true, true), set);

  const auto xs2 = collect([](const WorkerState& w) { return w.x; });
  const auto us2 = collect([](const WorkerState& w) { return w.opt.u; });
  CHECK(mean_across_workers(std::span<const ParamVector>(xs2)) == mean_x_before);
  CHECK(mean_across_workers(std::span<const ParamVector>(us2)) == mean_u_before);
}

TEST_CASE("policy validation") {
  SyncPolicySet set;
  set.params = SyncPolicy::never();
  CHECK_THROWS_AS(set.validate(), std::invalid_argument);
  set.params = SyncPolicy::probabilistic(0.0);
  CHECK_THROWS_AS(set.validate(), std::invalid_argument);
  set.params = SyncPolicy::reset_with_params();
  CHECK_THROWS_AS(set.validate(), std::invalid_argument);
  set.params = SyncPolicy::periodic(0);
  CHECK_THROWS_AS(set.validate(), std::invalid_argument);
  set.params = SyncPolicy::periodic(16);
  CHECK_NOTHROW(set.validate());

  std::vector<WorkerState> mismatched;
  mismatched.push_back(make_worker(0, ParamVector(2), ParamVector(2), ParamVector(2)));
  mismatched.push_back(make_worker(1, ParamVector(3), ParamVector(3), ParamVector(3)));
  CHECK_THROWS_AS(apply_sync(mismatched, fire(1, true, false, false), set),
                  std::invalid_argument);
}
