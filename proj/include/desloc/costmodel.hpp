#pragma once

#include <cstdint>
#include <string>

namespace desloc {

// Inputs to the closed-form wall-clock estimator. Bandwidth is expressed in
// parameters per second so the model stays unit-consistent without fixing a
// wire precision; bandwidth_params_per_s converts from Gbit/s.
struct CostModelParams {
  double param_count = 1.7e9;        // d
  double tokens = 4.295e10;          // D
  double workers = 4.0;              // M
  double flops_per_s = 4e15;         // S, peak per worker
  double mfu = 0.4;                  // achieved fraction of peak, in (0,1]
  double bandwidth = 3.125e8;        // B, parameters per second
  double latency = 5e-3;             // l, seconds per collective
  double steps = 20480.0;            // T, optimizer steps
  double overlap = 1.0;              // fraction of comms NOT hidden by compute

  void validate() const;
};

double bandwidth_params_per_s(double gbit_per_s, double bytes_per_param = 4.0);

// Training-method shapes the estimator distinguishes. Periods are
// real-valued: the model uses the continuous T/K event-count form.
struct CostMethod {
  enum class Kind { Ddp, FedAvg, LocalAdam, DesLoc };
  Kind kind = Kind::Ddp;
  double k = 1.0;              // FedAvg / LocalAdam
  double kx = 1.0, ku = 1.0, kv = 1.0;  // DesLoc

  static CostMethod ddp() { return {Kind::Ddp}; }
  static CostMethod fedavg(double k) { return {Kind::FedAvg, k}; }
  static CostMethod local_adam(double k) { return {Kind::LocalAdam, k}; }
  static CostMethod des_loc(double kx, double ku, double kv) {
    return {Kind::DesLoc, 1.0, kx, ku, kv};
  }

  std::string label() const;
};

// 6*d*D / (MFU * S * M): total training FLOPs spread over the fleet.
double t_compute(const CostModelParams& p);

// Ring collective over a payload of P parameters: 2P/B * (1 - 1/M) + l.
double t_ring(double payload_params, const CostModelParams& p);

// Model-sized sync events over the run: T, T/K, 3T/K, or T/Kx + T/Ku + T/Kv.
double sync_events(const CostMethod& method, const CostModelParams& p);

struct CostBreakdown {
  double compute = 0.0;
  double comms = 0.0;
  double total = 0.0;
  double utilization = 0.0;  // compute / total
  double events = 0.0;
};

CostBreakdown t_total(const CostMethod& method, const CostModelParams& p);

double utilization(const CostMethod& method, const CostModelParams& p);

// Ratio of every-step sync events to the method's events; per-event time is
// identical across methods, so this is the communication-cost reduction.
double comm_reduction_vs_ddp(const CostMethod& method, const CostModelParams& p);

}  // namespace desloc
