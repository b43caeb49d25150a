#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "desloc/config.hpp"
#include "desloc/io.hpp"
#include "desloc/methods.hpp"
#include "desloc/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> record_every;
  std::optional<std::uint32_t> threads;
  std::optional<std::string> out_path;
  std::optional<std::string> format;
};

void apply_overrides(desloc::ExperimentConfig& cfg, const RunOverrides& ov) {
  if (ov.seed) cfg.sim.seed = *ov.seed;
  if (ov.record_every) cfg.sim.record_every = *ov.record_every;
  if (ov.threads) cfg.sim.threads = *ov.threads;
  if (ov.out_path) cfg.output.path = *ov.out_path;
  if (ov.format) {
    if (*ov.format == "csv") cfg.output.format = desloc::OutputFormat::Csv;
    else if (*ov.format == "json") cfg.output.format = desloc::OutputFormat::Json;
    else throw desloc::ConfigError("unknown output format: " + *ov.format);
  }
  cfg.sim.validate();
}

void emit_rows(const desloc::ExperimentConfig& cfg, std::span<const desloc::MetricsRow> rows,
               const std::string& key_column = "", const std::string& key_value = "",
               bool append = false) {
  const auto write = [&](std::ostream& out) {
    if (cfg.output.format == desloc::OutputFormat::Csv) {
      desloc::write_csv(out, rows, key_column, key_value);
    } else {
      desloc::write_json(out, rows);
    }
  };
  if (cfg.output.path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(cfg.output.path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw desloc::ConfigError("cannot open output file: " + cfg.output.path);
  write(out);
}

std::string opt_str(const std::optional<double>& v) {
  return v ? desloc::format_double(*v) : std::string("n/a");
}

void print_summary(const desloc::SimResult& res) {
  std::ostream& out = std::cerr;
  out << "steps recorded:   " << res.rows.size() << '\n';
  out << "final dist_to_opt: " << opt_str(res.final_dist_to_opt) << '\n';
  out << "cum payload units: " << res.payload_units << '\n';
  if (res.divergence) {
    out << "DIVERGED at step " << res.divergence->step << " in " << res.divergence->quantity
        << " (worker " << res.divergence->worker << ")\n";
  } else {
    out << "status: completed\n";
  }
}

int cmd_run(const std::string& config_path, const RunOverrides& ov) {
  desloc::ExperimentConfig cfg = desloc::load_experiment_config(config_path);
  apply_overrides(cfg, ov);
  const desloc::SimResult res = desloc::run(cfg.sim);
  emit_rows(cfg, res.rows);
  print_summary(res);
  return res.divergence ? kExitDiverged : kExitOk;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& method_texts,
                const RunOverrides& ov) {
  desloc::ExperimentConfig cfg = desloc::load_experiment_config(config_path);
  apply_overrides(cfg, ov);
  if (method_texts.empty()) throw desloc::ConfigError("compare needs --methods");

  struct Entry {
    std::string label;
    desloc::SimResult result;
  };
  std::vector<Entry> entries;
  for (const std::string& text : method_texts) {
    const desloc::MethodSpec method = desloc::parse_method(text);
    desloc::SimConfig sim = cfg.sim;
    sim.policies = desloc::method_policies(method);
    entries.push_back({desloc::method_label(method), desloc::run(sim)});
  }

  const auto write_all = [&](std::ostream& out) {
    if (cfg.output.format == desloc::OutputFormat::Csv) {
      desloc::write_csv_header(out, "method");
      for (const Entry& e : entries) desloc::write_csv_rows(out, e.result.rows, e.label);
    } else {
      out << "{\n";
      for (std::size_t i = 0; i < entries.size(); ++i) {
        out << "\"" << entries[i].label << "\": ";
        desloc::write_json(out, entries[i].result.rows);
        if (i + 1 < entries.size()) out << ",";
        out << "\n";
      }
      out << "}\n";
    }
  };
  if (cfg.output.path.empty()) {
    write_all(std::cout);
  } else {
    std::ofstream out(cfg.output.path);
    if (!out) throw desloc::ConfigError("cannot open output file: " + cfg.output.path);
    write_all(out);
  }
  bool any_diverged = false;
  for (const Entry& e : entries) any_diverged = any_diverged || e.result.divergence.has_value();

  std::vector<const Entry*> ranked;
  for (const Entry& e : entries) ranked.push_back(&e);
  std::stable_sort(ranked.begin(), ranked.end(), [](const Entry* a, const Entry* b) {
    const double da = a->result.final_dist_to_opt.value_or(INFINITY);
    const double db = b->result.final_dist_to_opt.value_or(INFINITY);
    return da < db;
  });
  std::cerr << "final distance ranking (best first):\n";
  for (const Entry* e : ranked) {
    std::cerr << "  " << e->label << "  dist=" << opt_str(e->result.final_dist_to_opt)
              << "  payload=" << e->result.payload_units;
    if (e->result.divergence) std::cerr << "  [diverged]";
    std::cerr << '\n';
  }
  return any_diverged ? kExitDiverged : kExitOk;
}

struct CostFlags {
  std::optional<double> d, tokens, workers, flops, mfu, bandwidth_params, bandwidth_gbps,
      bytes_per_param, latency, steps, overlap;
  std::uint64_t k = 256;
  std::uint64_t kx = 256, ku = 768, kv = 1536;
  std::vector<double> sweep;  // lo_gbps, hi_gbps, points
  std::string sweep_out;
};

int cmd_cost(const std::string& config_path, const CostFlags& flags) {
  desloc::CostModelParams p;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw desloc::ConfigError("cannot open config file: " + config_path);
    p = desloc::parse_cost_model_config(in);
  }
  if (flags.d) p.param_count = *flags.d;
  if (flags.tokens) p.tokens = *flags.tokens;
  if (flags.workers) p.workers = *flags.workers;
  if (flags.flops) p.flops_per_s = *flags.flops;
  if (flags.mfu) p.mfu = *flags.mfu;
  if (flags.bandwidth_params && flags.bandwidth_gbps) {
    throw desloc::ConfigError("give either --bandwidth-params or --bandwidth-gbps");
  }
  if (flags.bandwidth_params) p.bandwidth = *flags.bandwidth_params;
  if (flags.bandwidth_gbps) {
    p.bandwidth =
        desloc::bandwidth_params_per_s(*flags.bandwidth_gbps, flags.bytes_per_param.value_or(4.0));
  }
  if (flags.latency) p.latency = *flags.latency;
  if (flags.steps) p.steps = *flags.steps;
  if (flags.overlap) p.overlap = *flags.overlap;
  p.validate();

  const std::vector<desloc::CostMethod> methods = {
      desloc::CostMethod::ddp(),
      desloc::CostMethod::fedavg(static_cast<double>(flags.k)),
      desloc::CostMethod::local_adam(static_cast<double>(flags.k)),
      desloc::CostMethod::des_loc(static_cast<double>(flags.kx), static_cast<double>(flags.ku),
                                  static_cast<double>(flags.kv)),
  };

  std::cout << "method,events,t_compute_s,t_comms_s,t_total_s,utilization,reduction_vs_ddp\n";
  for (const desloc::CostMethod& m : methods) {
    const desloc::CostBreakdown b = desloc::t_total(m, p);
    std::cout << m.label() << ',' << desloc::format_double(b.events) << ','
              << desloc::format_double(b.compute) << ',' << desloc::format_double(b.comms) << ','
              << desloc::format_double(b.total) << ',' << desloc::format_double(b.utilization)
              << ',' << desloc::format_double(desloc::comm_reduction_vs_ddp(m, p)) << '\n';
  }

  if (!flags.sweep.empty()) {
    if (flags.sweep.size() != 3 || flags.sweep[0] <= 0 || flags.sweep[1] <= flags.sweep[0] ||
        flags.sweep[2] < 2) {
      throw desloc::ConfigError("--sweep-bandwidth needs LO_GBPS HI_GBPS POINTS (hi > lo > 0)");
    }
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!flags.sweep_out.empty()) {
      file.open(flags.sweep_out);
      if (!file) throw desloc::ConfigError("cannot open output file: " + flags.sweep_out);
      out = &file;
    }
    *out << "bandwidth_gbps,method,t_compute_s,t_comms_s,t_total_s,utilization\n";
    const int points = static_cast<int>(flags.sweep[2]);
    const double log_lo = std::log10(flags.sweep[0]);
    const double log_hi = std::log10(flags.sweep[1]);
    for (int i = 0; i < points; ++i) {
      const double gbps = std::pow(10.0, log_lo + (log_hi - log_lo) * i / (points - 1));
      desloc::CostModelParams swept = p;
      swept.bandwidth =
          desloc::bandwidth_params_per_s(gbps, flags.bytes_per_param.value_or(4.0));
      for (const desloc::CostMethod& m : methods) {
        const desloc::CostBreakdown b = desloc::t_total(m, swept);
        *out << desloc::format_double(gbps) << ',' << m.label() << ','
             << desloc::format_double(b.compute) << ',' << desloc::format_double(b.comms) << ','
             << desloc::format_double(b.total) << ',' << desloc::format_double(b.utilization)
             << '\n';
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-worker simulator and cost model for desynchronized optimizer averaging"};
  app.require_subcommand(1);

  RunOverrides ov;
  std::string run_config, compare_config, cost_config;
  std::vector<std::string> methods;
  CostFlags cost_flags;

  const auto add_shared = [&](CLI::App* cmd) {
    cmd->add_option("--seed", ov.seed, "Override the run seed")->envname("DESLOC_SEED");
    cmd->add_option("--record-every", ov.record_every, "Metrics recording stride");
    cmd->add_option("--threads", ov.threads, "Worker threads (results are thread-count invariant)");
    cmd->add_option("--out", ov.out_path, "Output file (default: config output.path or stdout)");
    cmd->add_option("--format", ov.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Run one simulation from a JSON config");
  run_cmd->add_option("config", run_config, "Experiment config (JSON)")->required();
  add_shared(run_cmd);

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Run several methods on a shared config and rank them");
  compare_cmd->add_option("config", compare_config, "Experiment config (JSON)")->required();
  compare_cmd
      ->add_option("--methods", methods,
                   "Methods: ddp, local_adam:K, des_loc:Kx:Ku:Kv, favg_plus_opt:K, "
                   "favg_minus_opt:K")
      ->required()
      ->delimiter(',');
  add_shared(compare_cmd);

  CLI::App* cost_cmd = app.add_subcommand("cost", "Closed-form wall-clock and communication model");
  cost_cmd->add_option("config", cost_config, "Optional JSON config with a cost_model block");
  cost_cmd->add_option("--d", cost_flags.d, "Model parameter count");
  cost_cmd->add_option("--tokens", cost_flags.tokens, "Total training tokens");
  cost_cmd->add_option("--workers", cost_flags.workers, "Data-parallel workers");
  cost_cmd->add_option("--flops", cost_flags.flops, "Peak FLOP/s per worker");
  cost_cmd->add_option("--mfu", cost_flags.mfu, "Achieved fraction of peak FLOP/s");
  cost_cmd->add_option("--bandwidth-params", cost_flags.bandwidth_params,
                       "Peer-to-peer bandwidth in parameters per second");
  cost_cmd->add_option("--bandwidth-gbps", cost_flags.bandwidth_gbps,
                       "Peer-to-peer bandwidth in Gbit/s");
  cost_cmd->add_option("--bytes-per-param", cost_flags.bytes_per_param,
                       "Wire bytes per parameter for Gbit/s conversion (default 4)");
  cost_cmd->add_option("--latency", cost_flags.latency, "Per-collective latency in seconds");
  cost_cmd->add_option("--steps", cost_flags.steps, "Total optimizer steps");
  cost_cmd->add_option("--overlap", cost_flags.overlap,
                       "Fraction of communication not hidden by compute (default 1)");
  cost_cmd->add_option("--k", cost_flags.k, "Sync period for fedavg/local_adam rows");
  cost_cmd->add_option("--kx", cost_flags.kx, "Desynced params period");
  cost_cmd->add_option("--ku", cost_flags.ku, "Desynced first-moment period");
  cost_cmd->add_option("--kv", cost_flags.kv, "Desynced second-moment period");
  cost_cmd->add_option("--sweep-bandwidth", cost_flags.sweep, "LO_GBPS HI_GBPS POINTS")
      ->expected(3);
  cost_cmd->add_option("--sweep-out", cost_flags.sweep_out, "CSV file for the sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_config, ov);
    if (compare_cmd->parsed()) return cmd_compare(compare_config, methods, ov);
    if (cost_cmd->parsed()) return cmd_cost(cost_config, cost_flags);
  } catch (const desloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
