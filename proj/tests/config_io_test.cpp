#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <charconv>
#include <sstream>

#include "desloc/config.hpp"
#include "desloc/io.hpp"
#include "desloc/sim.hpp"

using namespace desloc;

namespace {

const char* kValidConfig = R"({
  "workers": 4,
  "steps": 64,
  "seed": 11,
  "optimizer": {
    "kind": "adam",
    "beta1": 0.9,
    "beta2": 0.99,
    "clip": {"mode": "coordinatewise", "rho": 1.0}
  },
  "eta": {"kind": "constant", "eta": 0.02},
  "sync": {
    "params": {"mode": "periodic", "period": 8},
    "first_moment": {"mode": "periodic", "period": 16},
    "second_moment": {"mode": "never"}
  },
  "objective": {
    "kind": "quadratic",
    "center": [0.0, 0.0],
    "curvature": [1.0, 2.0],
    "noise": {"kind": "iid_gaussian", "sigma": 0.5},
    "start": [1.5, -0.5]
  },
  "output": {"format": "csv", "record_every": 8}
})";

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_config(in);
}

}  // namespace

TEST_CASE("well-formed configs parse into the run description") {
  const ExperimentConfig cfg = parse(kValidConfig);
  CHECK(cfg.sim.workers == 4);
  CHECK(cfg.sim.steps == 64);
  CHECK(cfg.sim.seed == 11);
  CHECK(cfg.sim.record_every == 8);
  CHECK(cfg.sim.optimizer.kind == OptimizerKind::Adam);
  CHECK(cfg.sim.policies.params.period == 8);
  CHECK(cfg.sim.policies.second_moment.mode == SyncMode::Never);
  CHECK(cfg.sim.objective.kind() == Objective::Kind::Quadratic);
  CHECK(cfg.sim.objective.default_start() == ParamVector({1.5, -0.5}));
  CHECK(cfg.output.format == OutputFormat::Csv);
}

TEST_CASE("unknown keys are rejected with their path") {
  std::string broken = kValidConfig;
  broken.insert(broken.rfind('}'), R"(, "extra_key": 1)");
  CHECK_THROWS_WITH_AS(parse(broken), doctest::Contains("config.extra_key"), ConfigError);

  std::string nested = kValidConfig;
  nested.replace(nested.find("\"beta1\""), 7, "\"beta_one\"");
  CHECK_THROWS_WITH_AS(parse(nested), doctest::Contains("config.optimizer"), ConfigError);
}

TEST_CASE("missing keys name their path") {
  std::string no_eta = kValidConfig;
  no_eta.replace(no_eta.find("\"eta\""), 5, "\"lr\"");
  CHECK_THROWS_WITH_AS(parse(no_eta), doctest::Contains("config.eta"), ConfigError);
}

TEST_CASE("a never-synced parameter vector is rejected up front") {
  std::string never = kValidConfig;
  never.replace(never.find(R"({"mode": "periodic", "period": 8})"),
                std::string(R"({"mode": "periodic", "period": 8})").size(),
                R"({"mode": "probabilistic", "p": 0.0})");
  CHECK_THROWS_WITH_AS(parse(never), doctest::Contains("unbounded"), ConfigError);

  std::string reset = kValidConfig;
  reset.replace(reset.find(R"({"mode": "periodic", "period": 8})"),
                std::string(R"({"mode": "periodic", "period": 8})").size(),
                R"({"mode": "reset_with_params"})");
  CHECK_THROWS_AS(parse(reset), ConfigError);
}

TEST_CASE("csv output has the documented header and row cadence") {
  const ExperimentConfig cfg = parse(kValidConfig);
  const SimResult res = run(cfg.sim);
  std::ostringstream out;
  write_csv(out, res.rows);
  const std::string text = out.str();

  std::istringstream lines(text);
  std::string header;
  std::getline(lines, header);
  CHECK(header == kCsvHeader);

  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == cfg.sim.steps / cfg.sim.record_every);
}

TEST_CASE("reruns emit byte-identical csv, also across thread counts") {
  const ExperimentConfig cfg = parse(kValidConfig);
  const auto emit = [&](std::uint32_t threads) {
    SimConfig sim = cfg.sim;
    sim.threads = threads;
    std::ostringstream out;
    write_csv(out, run(sim).rows);
    return out.str();
  };
  const std::string once = emit(1);
  CHECK(once == emit(1));
  CHECK(once == emit(4));
}

TEST_CASE("json output round-trips to the rows that produced it") {
  const ExperimentConfig cfg = parse(kValidConfig);
  const SimResult res = run(cfg.sim);
  std::ostringstream out;
  write_json(out, res.rows);
  std::istringstream in(out.str());
  const std::vector<MetricsRow> parsed = parse_json_rows(in);
  REQUIRE(parsed.size() == res.rows.size());
  CHECK(parsed == res.rows);
}

TEST_CASE("doubles serialize as their shortest round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, 1e300, -4.9e-324, 0.0, 2.0, 692.8003100000001}) {
    const std::string s = format_double(v);
    double back = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(res.ec == std::errc());
    CHECK(back == v);
  }
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("cost-model blocks parse standalone or embedded") {
  const char* cost = R"({
    "cost_model": {
      "d": 1.7e9,
      "tokens": 4.295e10,
      "workers": 4,
      "flops_per_s": 4e15,
      "mfu": 0.4,
      "bandwidth_gbps": 10.0,
      "latency_s": 0.005,
      "steps": 20480
    }
  })";
  std::istringstream in(cost);
  const CostModelParams p = parse_cost_model_config(in);
  CHECK(p.param_count == 1.7e9);
  CHECK(p.bandwidth == doctest::Approx(3.125e8).epsilon(1e-12));

  const char* bad = R"({"cost_model": {"d": 1.0, "unknown_field": 2}})";
  std::istringstream bad_in(bad);
  CHECK_THROWS_WITH_AS(parse_cost_model_config(bad_in),
                       doctest::Contains("unknown_field"), ConfigError);
}
