#pragma once

#include <cstdint>
#include <string>

#include "desloc/costmodel.hpp"
#include "desloc/sync.hpp"

namespace desloc {

// Named baseline and low-communication training methods, mapped onto sync
// policy sets over (params, first moment, second moment).
struct MethodSpec {
  enum class Kind { Ddp, LocalAdam, DesLoc, FavgPlusOpt, FavgMinusOpt };
  Kind kind = Kind::Ddp;
  std::uint64_t k = 1;               // LocalAdam / FAVG variants
  std::uint64_t kx = 1, ku = 1, kv = 1;  // DesLoc

  static MethodSpec ddp() { return {Kind::Ddp}; }
  static MethodSpec local_adam(std::uint64_t k) { return {Kind::LocalAdam, k}; }
  static MethodSpec des_loc(std::uint64_t kx, std::uint64_t ku, std::uint64_t kv) {
    return {Kind::DesLoc, 1, kx, ku, kv};
  }
  static MethodSpec favg_plus_opt(std::uint64_t k) { return {Kind::FavgPlusOpt, k}; }
  static MethodSpec favg_minus_opt(std::uint64_t k) { return {Kind::FavgMinusOpt, k}; }
};

// Parses "ddp", "local_adam:K", "des_loc:Kx:Ku:Kv", "favg_plus_opt:K",
// "favg_minus_opt:K". Throws std::invalid_argument on anything else.
MethodSpec parse_method(const std::string& text);

std::string method_label(const MethodSpec& m);

// Every-step sync for DDP (with gradient-allreduce payload accounting), equal
// periods for Local Adam, independent periods for the desynced method,
// params-only for the FedAvg-style baselines (states kept or reset).
SyncPolicySet method_policies(const MethodSpec& m);

// The matching closed-form cost-model method.
CostMethod method_cost(const MethodSpec& m);

}  // namespace desloc
