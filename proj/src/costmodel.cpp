#include "desloc/costmodel.hpp"

#include <stdexcept>

namespace desloc {

void CostModelParams::validate() const {
  if (!(param_count > 0.0) || !(tokens > 0.0) || !(workers > 0.0) || !(flops_per_s > 0.0) ||
      !(bandwidth > 0.0) || !(latency >= 0.0) || !(steps > 0.0)) {
    throw std::invalid_argument("cost-model parameters must be positive");
  }
  if (!(mfu > 0.0 && mfu <= 1.0)) throw std::invalid_argument("mfu must be in (0,1]");
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw std::invalid_argument("overlap fraction must be in [0,1]");
  }
}

double bandwidth_params_per_s(double gbit_per_s, double bytes_per_param) {
  if (!(gbit_per_s > 0.0) || !(bytes_per_param > 0.0)) {
    throw std::invalid_argument("bandwidth conversion needs positive inputs");
  }
  return gbit_per_s * 1e9 / 8.0 / bytes_per_param;
}

std::string CostMethod::label() const {
  switch (kind) {
    case Kind::Ddp: return "ddp";
    case Kind::FedAvg: return "fedavg:" + std::to_string(static_cast<long long>(k));
    case Kind::LocalAdam: return "local_adam:" + std::to_string(static_cast<long long>(k));
    case Kind::DesLoc:
      return "des_loc:" + std::to_string(static_cast<long long>(kx)) + ":" +
             std::to_string(static_cast<long long>(ku)) + ":" +
             std::to_string(static_cast<long long>(kv));
  }
  return "?";
}

double t_compute(const CostModelParams& p) {
  p.validate();
  return 6.0 * p.param_count * p.tokens / (p.mfu * p.flops_per_s * p.workers);
}

double t_ring(double payload_params, const CostModelParams& p) {
  p.validate();
  if (!(payload_params >= 0.0)) throw std::invalid_argument("payload must be >= 0");
  return 2.0 * payload_params / p.bandwidth * (1.0 - 1.0 / p.workers) + p.latency;
}

double sync_events(const CostMethod& method, const CostModelParams& p) {
  switch (method.kind) {
    case CostMethod::Kind::Ddp: return p.steps;
    case CostMethod::Kind::FedAvg:
      if (!(method.k > 0.0)) throw std::invalid_argument("sync period must be positive");
      return p.steps / method.k;
    case CostMethod::Kind::LocalAdam:
      if (!(method.k > 0.0)) throw std::invalid_argument("sync period must be positive");
      return 3.0 * p.steps / method.k;
    case CostMethod::Kind::DesLoc:
      if (!(method.kx > 0.0 && method.ku > 0.0 && method.kv > 0.0)) {
        throw std::invalid_argument("sync periods must be positive");
      }
      return p.steps / method.kx + p.steps / method.ku + p.steps / method.kv;
  }
  return 0.0;
}

CostBreakdown t_total(const CostMethod& method, const CostModelParams& p) {
  CostBreakdown out;
  out.compute = t_compute(p);
  out.events = sync_events(method, p);
  out.comms = out.events * t_ring(p.param_count, p) * p.overlap;
  out.total = out.compute + out.comms;
  out.utilization = out.compute / out.total;
  return out;
}

double utilization(const CostMethod& method, const CostModelParams& p) {
  return t_total(method, p).utilization;
}

double comm_reduction_vs_ddp(const CostMethod& method, const CostModelParams& p) {
  return sync_events(CostMethod::ddp(), p) / sync_events(method, p);
}

}  // namespace desloc
