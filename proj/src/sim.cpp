#include "desloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace desloc {

void EtaSchedule::validate(std::uint64_t total_steps) const {
  if (!(eta_peak > 0.0)) throw std::invalid_argument("eta_peak must be positive");
  if (kind == Kind::Constant) return;
  if (!(decay_fraction >= 0.0 && decay_fraction < 1.0)) {
    throw std::invalid_argument("decay_fraction must be in [0,1)");
  }
  const double decay_start = static_cast<double>(total_steps) * (1.0 - decay_fraction);
  if (static_cast<double>(warmup_steps) > decay_start) {
    throw std::invalid_argument("warmup and decay phases overlap");
  }
}

double eta_at(std::uint64_t t, const EtaSchedule& schedule, std::uint64_t total_steps) {
  if (t >= total_steps) throw std::invalid_argument("step index out of range");
  if (schedule.kind == EtaSchedule::Kind::Constant) return schedule.eta_peak;
  if (t < schedule.warmup_steps) {
    return schedule.eta_peak * static_cast<double>(t) / static_cast<double>(schedule.warmup_steps);
  }
  const double total = static_cast<double>(total_steps);
  const double decay_start = total * (1.0 - schedule.decay_fraction);
  const double tf = static_cast<double>(t);
  if (tf < decay_start) return schedule.eta_peak;
  return schedule.eta_peak * (1.0 - std::sqrt((tf - decay_start) / (total - decay_start)));
}

void SimConfig::validate() const {
  if (workers < 1) throw std::invalid_argument("need at least one worker");
  if (steps < 1) throw std::invalid_argument("need at least one step");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  optimizer.validate();
  policies.validate();
  eta.validate(steps);
  for (const MembershipEvent& e : events) {
    if (e.step == 0 || e.step >= steps) {
      throw std::invalid_argument("membership event step must lie strictly inside the run");
    }
    if (e.add_workers < 1) throw std::invalid_argument("membership event must add workers");
  }
  if (rel_change_window && *rel_change_window == 0) {
    throw std::invalid_argument("rel_change_window must be >= 1");
  }
}

namespace {

// Deterministic regardless of thread count: disjoint index ranges, no shared
// mutable state inside fn.
void parallel_for(std::size_t n, std::uint32_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t used = std::min<std::size_t>(threads, n);
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (std::size_t c = 0; c < used; ++c) {
    const std::size_t lo = n * c / used;
    const std::size_t hi = n * (c + 1) / used;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> guard(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double resolve_worker_sigma(const NoiseModel& noise, std::uint64_t run_seed,
                            std::uint32_t worker_id) {
  if (noise.kind == NoiseKind::IidGaussian) return noise.sigma;
  RngStream stream = RngStream::keyed(run_seed, StreamDomain::WorkerSigma, worker_id);
  return std::fabs(noise.sigma * stream.gaussian());
}

WorkerState make_worker(std::uint32_t id, const SimConfig& cfg, const Objective& obj) {
  WorkerState w;
  w.id = id;
  w.x = obj.default_start();
  w.opt = OptimizerState::zeros(obj.dim(), cfg.optimizer);
  w.noise_stream = RngStream::keyed(cfg.seed, StreamDomain::WorkerNoise, id);
  w.sigma = resolve_worker_sigma(obj.noise(), cfg.seed, id);
  return w;
}

ParamVector mean_of(const std::vector<WorkerState>& workers,
                    const std::function<const ParamVector&(const WorkerState&)>& get) {
  std::vector<const ParamVector*> views;
  views.reserve(workers.size());
  for (const WorkerState& w : workers) views.push_back(&get(w));
  return mean_across_workers(std::span<const ParamVector* const>(views));
}

ParamVector mean_x(const std::vector<WorkerState>& ws) {
  return mean_of(ws, [](const WorkerState& w) -> const ParamVector& { return w.x; });
}
ParamVector mean_u(const std::vector<WorkerState>& ws) {
  return mean_of(ws, [](const WorkerState& w) -> const ParamVector& { return w.opt.u; });
}
ParamVector mean_v(const std::vector<WorkerState>& ws) {
  return mean_of(ws, [](const WorkerState& w) -> const ParamVector& { return *w.opt.v; });
}

void apply_membership(std::vector<WorkerState>& workers, const MembershipEvent& event,
                      const SimConfig& cfg, const Objective& obj) {
  const bool has_v = workers.front().opt.v.has_value();
  const bool has_vt = workers.front().opt.v_tilde.has_value();

  ParamVector init_x, init_u, init_v, init_vt;
  if (event.init == MembershipEvent::Init::MeanBroadcast) {
    init_x = mean_x(workers);
    init_u = mean_u(workers);
    if (has_v) init_v = mean_v(workers);
    if (has_vt) {
      init_vt = mean_of(workers,
                        [](const WorkerState& w) -> const ParamVector& { return *w.opt.v_tilde; });
    }
  } else {
    const WorkerState& w0 = workers.front();
    init_x = w0.x;
    init_u = w0.opt.u;
    if (has_v) init_v = *w0.opt.v;
    if (has_vt) init_vt = *w0.opt.v_tilde;
  }

  std::uint32_t next_id = 0;
  for (const WorkerState& w : workers) next_id = std::max(next_id, w.id + 1);
  for (std::uint32_t k = 0; k < event.add_workers; ++k) {
    WorkerState w = make_worker(next_id++, cfg, obj);
    w.x = init_x;
    w.opt.u = init_u;
    if (has_v) w.opt.v = init_v;
    if (has_vt) w.opt.v_tilde = init_vt;
    workers.push_back(std::move(w));
  }
}

const char* quantity_name(int which) {
  switch (which) {
    case 0: return "params";
    case 1: return "first_moment";
    case 2: return "second_moment";
    default: return "running_max";
  }
}

bool all_finite(const ParamVector& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

// Tracks one state's distance to its value at the last sync (or run start)
// so recorded drift can be compared against the closed-form cap.
struct DriftTracker {
  bool active = false;
  double beta = 0.0;
  double rho = 0.0;
  std::int64_t base_step = -1;
  std::vector<ParamVector> baseline;

  void rebase(const std::vector<WorkerState>& workers, std::int64_t step,
              const std::function<const ParamVector&(const WorkerState&)>& get) {
    if (!active) return;
    base_step = step;
    baseline.clear();
    baseline.reserve(workers.size());
    for (const WorkerState& w : workers) baseline.push_back(get(w));
  }

  void extend(const WorkerState& joined,
              const std::function<const ParamVector&(const WorkerState&)>& get) {
    if (!active) return;
    // A joiner's window starts at its join value; the elapsed-step bound only
    // grows with time, so sharing the global window timing stays valid.
    baseline.push_back(get(joined));
  }

  std::pair<double, double> observe(const std::vector<WorkerState>& workers, std::int64_t step,
                                    const std::function<const ParamVector&(const WorkerState&)>&
                                        get) const {
    double worst = 0.0;
    for (std::size_t m = 0; m < workers.size(); ++m) {
      worst = std::max(worst, linf_norm(sub(get(workers[m]), baseline[m])));
    }
    const auto elapsed = static_cast<std::uint64_t>(step - base_step);
    return {worst, elapsed};
  }
};

// Samples the cross-worker mean of one state every `window` steps and reports
// its relative change between consecutive samples.
struct RelChangeSampler {
  std::uint64_t window = 1;
  ParamVector prev;

  bool due(std::uint64_t t) const { return (t + 1) % window == 0; }

  std::optional<double> sample(ParamVector current) {
    std::optional<double> value = relative_rate_of_change(prev, current);
    prev = std::move(current);
    return value;
  }
};

std::uint64_t policy_window(const SyncPolicy& p, std::uint64_t fallback) {
  switch (p.mode) {
    case SyncMode::Periodic: return p.period;
    case SyncMode::Probabilistic:
      if (p.prob > 0.0) {
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(1.0 / p.prob)));
      }
      return fallback;
    default: return fallback;
  }
}

}  // namespace

SimResult run(const SimConfig& config, const StepObserver& observer) {
  config.validate();
  const OptimizerSpec& spec = config.optimizer;
  Objective obj = config.objective;
  obj.bind_seed(config.seed);
  const std::size_t dim = obj.dim();
  const bool has_v = spec.kind != OptimizerKind::Sgdm;

  std::vector<WorkerState> workers;
  workers.reserve(config.workers);
  for (std::uint32_t id = 0; id < config.workers; ++id) {
    workers.push_back(make_worker(id, config, obj));
  }

  std::vector<MembershipEvent> events = config.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const MembershipEvent& a, const MembershipEvent& b) { return a.step < b.step; });
  std::size_t next_event = 0;

  SyncScheduler scheduler(config.seed, config.policies);

  // Reporting round length: full synchronization recurs at the least common
  // multiple of the effective periods.
  std::vector<std::uint64_t> round_periods;
  round_periods.push_back(policy_window(config.policies.params, 1));
  if (config.policies.first_moment.mode == SyncMode::Periodic ||
      config.policies.first_moment.mode == SyncMode::Probabilistic) {
    round_periods.push_back(policy_window(config.policies.first_moment, 1));
  }
  if (has_v && (config.policies.second_moment.mode == SyncMode::Periodic ||
                config.policies.second_moment.mode == SyncMode::Probabilistic)) {
    round_periods.push_back(policy_window(config.policies.second_moment, 1));
  }
  const std::uint64_t round_len = k_lcm(round_periods);

  const auto get_u = [](const WorkerState& w) -> const ParamVector& { return w.opt.u; };
  const auto get_v = [](const WorkerState& w) -> const ParamVector& { return *w.opt.v; };

  // Drift caps hold for states that are moving averages of clipped gradients
  // (or their squares). The normalized-gradient first moment is exempt.
  const bool clipped = spec.clip.mode != ClipMode::None;
  DriftTracker u_drift{clipped && spec.kind != OptimizerKind::Adopt, spec.beta1, spec.clip.rho,
                       -1, {}};
  DriftTracker v_drift{clipped && has_v, spec.beta2, spec.clip.rho, -1, {}};
  u_drift.rebase(workers, -1, get_u);
  if (has_v) v_drift.rebase(workers, -1, get_v);

  const std::uint64_t params_window = policy_window(config.policies.params, 1);
  RelChangeSampler u_rate{config.rel_change_window.value_or(
                              policy_window(config.policies.first_moment, params_window)),
                          ParamVector(dim)};
  RelChangeSampler v_rate{config.rel_change_window.value_or(
                              policy_window(config.policies.second_moment, params_window)),
                          ParamVector(dim)};

  SimResult result;
  std::uint64_t payload = 0;

  std::vector<ParamVector> g_true, g_hat;
  for (std::uint64_t t = 0; t < config.steps; ++t) {
    bool membership_applied = false;
    while (next_event < events.size() && events[next_event].step == t) {
      const std::size_t before = workers.size();
      apply_membership(workers, events[next_event], config, obj);
      for (std::size_t m = before; m < workers.size(); ++m) {
        u_drift.extend(workers[m], get_u);
        if (has_v) v_drift.extend(workers[m], get_v);
      }
      ++next_event;
      membership_applied = true;
    }
    const std::size_t count = workers.size();
    const double eta = eta_at(t, config.eta, config.steps);

    g_true.assign(count, ParamVector());
    g_hat.assign(count, ParamVector());
    parallel_for(count, config.threads, [&](std::size_t m) {
      WorkerState& w = workers[m];
      g_true[m] = obj.gradient(w.id, w.x);
      ParamVector noisy = g_true[m];
      for (std::size_t i = 0; i < dim; ++i) noisy[i] += w.sigma * w.noise_stream.gaussian();
      switch (spec.clip.mode) {
        case ClipMode::Coordinatewise: g_hat[m] = clip_coordinatewise(noisy, spec.clip.rho); break;
        case ClipMode::ByNorm: g_hat[m] = clip_by_norm(noisy, spec.clip.rho); break;
        case ClipMode::None: g_hat[m] = std::move(noisy); break;
      }
    });

    StepTrace trace;
    if (observer) {
      trace.step = t;
      trace.eta = eta;
      trace.worker_count = static_cast<std::uint32_t>(count);
      trace.membership_applied = membership_applied;
      trace.mean_x_pre = mean_x(workers);
      trace.mean_u_pre = mean_u(workers);
      trace.mean_g_hat = mean_across_workers(std::span<const ParamVector>(g_hat));
    }

    const SyncDecision decision = scheduler.decide(t);
    if (observer) {
      for (std::size_t q = 0; q < kQuantityCount; ++q) {
        const Quantity quantity = static_cast<Quantity>(q);
        if (!decision.fired[q] ||
            config.policies.for_quantity(quantity).mode == SyncMode::ResetWithParams) {
          continue;
        }
        if (quantity == Quantity::Params) trace.sync_mean_before[q] = mean_x(workers);
        else if (quantity == Quantity::FirstMoment) trace.sync_mean_before[q] = mean_u(workers);
        else if (has_v) trace.sync_mean_before[q] = mean_v(workers);
      }
    }
    payload += apply_sync(workers, decision, config.policies).payload_units;
    if (observer) {
      for (std::size_t q = 0; q < kQuantityCount; ++q) {
        if (!trace.sync_mean_before[q]) continue;
        const Quantity quantity = static_cast<Quantity>(q);
        if (quantity == Quantity::Params) trace.sync_mean_after[q] = mean_x(workers);
        else if (quantity == Quantity::FirstMoment) trace.sync_mean_after[q] = mean_u(workers);
        else trace.sync_mean_after[q] = mean_v(workers);
      }
    }

    parallel_for(count, config.threads, [&](std::size_t m) {
      WorkerState& w = workers[m];
      switch (spec.kind) {
        case OptimizerKind::Adam: {
          w.opt = adam_update_states(w.opt, g_hat[m], spec);
          w.x = adam_param_step(w.x, w.opt, eta, spec);
          break;
        }
        case OptimizerKind::Adopt: {
          auto [x_next, opt_next] = adopt_update(w.x, w.opt, g_hat[m], eta, spec);
          w.x = std::move(x_next);
          w.opt = std::move(opt_next);
          break;
        }
        case OptimizerKind::Sgdm: {
          auto [x_next, opt_next] = sgdm_update(w.x, w.opt, g_hat[m], eta, spec.beta1);
          w.x = std::move(x_next);
          w.opt = std::move(opt_next);
          break;
        }
      }
    });

    for (std::size_t m = 0; m < count && !result.divergence; ++m) {
      const WorkerState& w = workers[m];
      if (!all_finite(w.x)) result.divergence = {t, quantity_name(0), w.id};
      else if (!all_finite(w.opt.u)) result.divergence = {t, quantity_name(1), w.id};
      else if (w.opt.v && !all_finite(*w.opt.v)) result.divergence = {t, quantity_name(2), w.id};
      else if (w.opt.v_tilde && !all_finite(*w.opt.v_tilde)) {
        result.divergence = {t, quantity_name(3), w.id};
      }
    }
    if (result.divergence) break;

    if (decision.fired[static_cast<std::size_t>(Quantity::FirstMoment)]) {
      u_drift.rebase(workers, static_cast<std::int64_t>(t), get_u);
    }
    if (has_v && decision.fired[static_cast<std::size_t>(Quantity::SecondMoment)]) {
      v_drift.rebase(workers, static_cast<std::int64_t>(t), get_v);
    }

    std::optional<double> fresh_rate_u, fresh_rate_v;
    if (u_rate.due(t)) fresh_rate_u = u_rate.sample(mean_u(workers));
    if (has_v && v_rate.due(t)) fresh_rate_v = v_rate.sample(mean_v(workers));

    const bool record = ((t + 1) % config.record_every == 0) || t + 1 == config.steps;
    ParamVector x_bar;
    if (record || observer) x_bar = mean_x(workers);
    if (record) {
      MetricsRow row;
      row.step = t;
      row.round = t / round_len;
      row.worker_count = static_cast<std::uint32_t>(count);
      double loss = 0.0, gnorm = 0.0, pnorm = 0.0;
      for (std::size_t m = 0; m < count; ++m) {
        loss += obj.value(workers[m].id, workers[m].x);
        gnorm += l2_norm(g_true[m]);
        pnorm += l2_norm(workers[m].x);
      }
      row.loss_mean = loss / static_cast<double>(count);
      row.grad_norm_mean = gnorm / static_cast<double>(count);
      row.param_norm_mean = pnorm / static_cast<double>(count);
      if (obj.optimum_known()) {
        row.dist_to_opt = l2_norm(sub(x_bar, obj.optimum()));
      } else {
        std::vector<std::uint32_t> ids;
        ids.reserve(count);
        for (const WorkerState& w : workers) ids.push_back(w.id);
        row.dist_to_opt = l2_norm(sub(x_bar, obj.optimum(ids)));
      }
      row.rel_change_u = fresh_rate_u;
      row.rel_change_v = fresh_rate_v;
      if (u_drift.active) {
        auto [observed, elapsed] = u_drift.observe(workers, static_cast<std::int64_t>(t), get_u);
        row.drift_u_observed = observed;
        row.drift_u_bound = drift_bound_first(u_drift.rho, u_drift.beta, elapsed);
      }
      if (v_drift.active) {
        auto [observed, elapsed] = v_drift.observe(workers, static_cast<std::int64_t>(t), get_v);
        row.drift_v_observed = observed;
        row.drift_v_bound = drift_bound_second(v_drift.rho, v_drift.beta, elapsed);
      }
      row.cum_payload_units = payload;
      row.eta = eta;
      result.rows.push_back(std::move(row));
    }

    if (observer) {
      trace.mean_x_post = x_bar;
      trace.mean_u_post = mean_u(workers);
      observer(trace);
    }
  }

  result.payload_units = payload;
  if (!result.rows.empty()) result.final_dist_to_opt = result.rows.back().dist_to_opt;
  result.workers = std::move(workers);
  return result;
}

}  // namespace desloc
