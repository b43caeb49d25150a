#include "desloc/config.hpp"

#include <fstream>
#include <set>
#include <vector>

#include <json.hpp>

namespace desloc {

namespace {

using nlohmann::json;

// Typed access into one JSON object with key-path error messages and
// unknown-key rejection.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError("expected an object at " + path_);
  }

  const std::string& path() const { return path_; }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& require(const std::string& key) {
    if (!node_.contains(key)) throw ConfigError("missing key " + child_path(key));
    seen_.insert(key);
    return node_.at(key);
  }

  const json* optional(const std::string& key) {
    if (!node_.contains(key)) return nullptr;
    seen_.insert(key);
    return &node_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    return convert<T>(require(key), child_path(key));
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    const json* j = optional(key);
    return j ? convert<T>(*j, child_path(key)) : fallback;
  }

  ObjectReader object(const std::string& key) { return ObjectReader(require(key), child_path(key)); }

  std::optional<ObjectReader> optional_object(const std::string& key) {
    const json* j = optional(key);
    if (!j) return std::nullopt;
    return ObjectReader(*j, child_path(key));
  }

  std::string child_path(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.contains(item.key())) {
        throw ConfigError("unknown key " + child_path(item.key()));
      }
    }
  }

  template <typename T>
  static T convert(const json& j, const std::string& path) {
    try {
      return j.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("wrong value type at " + path);
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

ParamVector read_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty array at " + path);
  std::vector<double> values;
  values.reserve(j.size());
  for (const json& e : j) {
    if (!e.is_number()) throw ConfigError("expected numbers at " + path);
    values.push_back(e.get<double>());
  }
  return ParamVector(std::move(values));
}

ClipConfig read_clip(ObjectReader r) {
  ClipConfig clip;
  const std::string mode = r.get<std::string>("mode");
  if (mode == "coordinatewise") clip.mode = ClipMode::Coordinatewise;
  else if (mode == "by_norm") clip.mode = ClipMode::ByNorm;
  else if (mode == "none") clip.mode = ClipMode::None;
  else throw ConfigError("unknown clip mode at " + r.child_path("mode"));
  clip.rho = r.get_or<double>("rho", 1.0);
  r.finish();
  return clip;
}

OptimizerSpec read_optimizer(ObjectReader r) {
  OptimizerSpec spec;
  const std::string kind = r.get<std::string>("kind");
  if (kind == "adam") spec.kind = OptimizerKind::Adam;
  else if (kind == "adopt") spec.kind = OptimizerKind::Adopt;
  else if (kind == "sgdm") spec.kind = OptimizerKind::Sgdm;
  else throw ConfigError("unknown optimizer kind at " + r.child_path("kind"));
  spec.beta1 = r.get<double>("beta1");
  spec.beta2 = r.get_or<double>("beta2", spec.kind == OptimizerKind::Adopt ? 0.9999 : 0.95);
  spec.lambda = r.get_or<double>("lambda", 1e-8);
  spec.epsilon = r.get_or<double>("epsilon", 1e-6);
  spec.amsgrad = r.get_or<bool>("amsgrad", false);
  if (auto clip = r.optional_object("clip")) spec.clip = read_clip(std::move(*clip));
  r.finish();
  return spec;
}

EtaSchedule read_eta(ObjectReader r) {
  EtaSchedule eta;
  const std::string kind = r.get<std::string>("kind");
  if (kind == "constant") {
    eta.kind = EtaSchedule::Kind::Constant;
    eta.eta_peak = r.get<double>("eta");
  } else if (kind == "wsd") {
    eta.kind = EtaSchedule::Kind::Wsd;
    eta.eta_peak = r.get<double>("eta_peak");
    eta.warmup_steps = r.get<std::uint64_t>("warmup_steps");
    eta.decay_fraction = r.get<double>("decay_fraction");
  } else {
    throw ConfigError("unknown schedule kind at " + r.child_path("kind"));
  }
  r.finish();
  return eta;
}

SyncPolicy read_policy(ObjectReader r, bool allow_reset) {
  SyncPolicy policy;
  const std::string mode = r.get<std::string>("mode");
  if (mode == "periodic") {
    policy = SyncPolicy::periodic(r.get<std::uint64_t>("period"));
  } else if (mode == "probabilistic") {
    policy = SyncPolicy::probabilistic(r.get<double>("p"));
  } else if (mode == "never") {
    policy = SyncPolicy::never();
  } else if (mode == "reset_with_params") {
    if (!allow_reset) {
      throw ConfigError("reset_with_params applies to optimizer states only, at " + r.path());
    }
    policy = SyncPolicy::reset_with_params();
  } else {
    throw ConfigError("unknown sync mode at " + r.child_path("mode"));
  }
  r.finish();
  return policy;
}

SyncPolicySet read_sync(ObjectReader r) {
  SyncPolicySet set;
  set.params = read_policy(r.object("params"), false);
  set.first_moment = read_policy(r.object("first_moment"), true);
  if (auto second = r.optional_object("second_moment")) {
    set.second_moment = read_policy(std::move(*second), true);
  }
  r.finish();
  return set;
}

NoiseModel read_noise(ObjectReader r) {
  NoiseModel noise;
  const std::string kind = r.get<std::string>("kind");
  if (kind == "iid_gaussian") noise.kind = NoiseKind::IidGaussian;
  else if (kind == "per_worker_gaussian") noise.kind = NoiseKind::PerWorkerGaussian;
  else throw ConfigError("unknown noise kind at " + r.child_path("kind"));
  noise.sigma = r.get<double>("sigma");
  if (!(noise.sigma >= 0.0)) throw ConfigError("sigma must be >= 0 at " + r.child_path("sigma"));
  r.finish();
  return noise;
}

Objective read_objective(ObjectReader r) {
  const std::string kind = r.get<std::string>("kind");
  NoiseModel noise;
  if (auto n = r.optional_object("noise")) noise = read_noise(std::move(*n));

  Objective obj = Objective::rosenbrock(noise);
  if (kind == "rosenbrock") {
    // defaults already set
  } else if (kind == "quadratic" || kind == "heterogeneous_quadratic") {
    ParamVector center = read_vector(r.require("center"), r.child_path("center"));
    ParamVector curvature = read_vector(r.require("curvature"), r.child_path("curvature"));
    try {
      if (kind == "quadratic") {
        obj = Objective::quadratic(std::move(center), std::move(curvature), noise);
      } else {
        obj = Objective::heterogeneous_quadratic(std::move(center), std::move(curvature),
                                                 r.get<double>("center_spread"), noise);
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(e.what()) + " at " + r.path());
    }
  } else {
    throw ConfigError("unknown objective kind at " + r.child_path("kind"));
  }
  if (const json* start = r.optional("start")) {
    ParamVector s = read_vector(*start, r.child_path("start"));
    try {
      obj.set_start(std::move(s));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(e.what()) + " at " + r.child_path("start"));
    }
  }
  r.finish();
  return obj;
}

std::vector<MembershipEvent> read_events(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("expected an array at " + path);
  std::vector<MembershipEvent> events;
  for (std::size_t i = 0; i < j.size(); ++i) {
    ObjectReader r(j.at(i), path + "[" + std::to_string(i) + "]");
    MembershipEvent e;
    e.step = r.get<std::uint64_t>("step");
    e.add_workers = r.get<std::uint32_t>("add_workers");
    const std::string init = r.get_or<std::string>("init", "mean_broadcast");
    if (init == "mean_broadcast") e.init = MembershipEvent::Init::MeanBroadcast;
    else if (init == "replicate_worker_zero") e.init = MembershipEvent::Init::ReplicateWorkerZero;
    else throw ConfigError("unknown init at " + r.child_path("init"));
    r.finish();
    events.push_back(e);
  }
  return events;
}

OutputOptions read_output(ObjectReader r, std::uint64_t& record_every) {
  OutputOptions out;
  const std::string format = r.get_or<std::string>("format", "csv");
  if (format == "csv") out.format = OutputFormat::Csv;
  else if (format == "json") out.format = OutputFormat::Json;
  else throw ConfigError("unknown output format at " + r.child_path("format"));
  out.path = r.get_or<std::string>("path", "");
  record_every = r.get_or<std::uint64_t>("record_every", record_every);
  r.finish();
  return out;
}

CostModelParams read_cost_model(ObjectReader r) {
  CostModelParams p;
  p.param_count = r.get_or<double>("d", p.param_count);
  p.tokens = r.get_or<double>("tokens", p.tokens);
  p.workers = r.get_or<double>("workers", p.workers);
  p.flops_per_s = r.get_or<double>("flops_per_s", p.flops_per_s);
  p.mfu = r.get_or<double>("mfu", p.mfu);
  if (r.has("bandwidth_params_per_s") && r.has("bandwidth_gbps")) {
    throw ConfigError("give either bandwidth_params_per_s or bandwidth_gbps at " + r.path());
  }
  if (r.has("bandwidth_gbps")) {
    const double bytes_per_param = r.get_or<double>("bytes_per_param", 4.0);
    p.bandwidth = bandwidth_params_per_s(r.get<double>("bandwidth_gbps"), bytes_per_param);
  } else {
    p.bandwidth = r.get_or<double>("bandwidth_params_per_s", p.bandwidth);
    r.get_or<double>("bytes_per_param", 4.0);  // accepted but unused without gbps
  }
  p.latency = r.get_or<double>("latency_s", p.latency);
  p.steps = r.get_or<double>("steps", p.steps);
  p.overlap = r.get_or<double>("overlap", p.overlap);
  r.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + " at " + r.path());
  }
  return p;
}

json parse_stream(std::istream& in) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  const json root = parse_stream(in);
  ObjectReader r(root, "config");

  ExperimentConfig cfg;
  cfg.sim.workers = r.get<std::uint32_t>("workers");
  cfg.sim.steps = r.get<std::uint64_t>("steps");
  cfg.sim.seed = r.get<std::uint64_t>("seed");
  cfg.sim.threads = r.get_or<std::uint32_t>("threads", 1);
  if (const json* w = r.optional("rel_change_window")) {
    cfg.sim.rel_change_window =
        ObjectReader::convert<std::uint64_t>(*w, r.child_path("rel_change_window"));
  }
  cfg.sim.optimizer = read_optimizer(r.object("optimizer"));
  cfg.sim.eta = read_eta(r.object("eta"));
  cfg.sim.policies = read_sync(r.object("sync"));
  cfg.sim.objective = read_objective(r.object("objective"));
  if (const json* events = r.optional("events")) {
    cfg.sim.events = read_events(*events, r.child_path("events"));
  }
  if (auto out = r.optional_object("output")) {
    cfg.output = read_output(std::move(*out), cfg.sim.record_every);
  }
  if (auto cost = r.optional_object("cost_model")) {
    cfg.cost_model = read_cost_model(std::move(*cost));
  }
  r.finish();

  try {
    cfg.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_experiment_config(in);
}

CostModelParams parse_cost_model_config(std::istream& in) {
  const json root = parse_stream(in);
  ObjectReader r(root, "config");
  if (auto cost = r.optional_object("cost_model")) {
    CostModelParams p = read_cost_model(std::move(*cost));
    // tolerate the experiment keys around the block without re-validating
    return p;
  }
  return read_cost_model(ObjectReader(root, "config"));
}

}  // namespace desloc
