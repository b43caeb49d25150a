#include "desloc/methods.hpp"

#include <stdexcept>
#include <vector>

namespace desloc {

namespace {

std::vector<std::uint64_t> parse_periods(const std::string& text, std::size_t pos,
                                         std::size_t expected) {
  std::vector<std::uint64_t> out;
  while (pos < text.size()) {
    std::size_t next = text.find(':', pos);
    if (next == std::string::npos) next = text.size();
    const std::string part = text.substr(pos, next - pos);
    try {
      out.push_back(std::stoull(part));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad sync period '" + part + "' in method '" + text + "'");
    }
    pos = next + 1;
  }
  if (out.size() != expected) {
    throw std::invalid_argument("method '" + text + "' needs " + std::to_string(expected) +
                                " sync period(s)");
  }
  for (std::uint64_t k : out) {
    if (k == 0) throw std::invalid_argument("sync periods must be >= 1 in '" + text + "'");
  }
  return out;
}

}  // namespace

MethodSpec parse_method(const std::string& text) {
  const std::size_t colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::size_t rest = colon == std::string::npos ? text.size() : colon + 1;
  if (name == "ddp") {
    if (colon != std::string::npos) throw std::invalid_argument("ddp takes no sync period");
    return MethodSpec::ddp();
  }
  if (name == "local_adam") return MethodSpec::local_adam(parse_periods(text, rest, 1)[0]);
  if (name == "des_loc") {
    const auto k = parse_periods(text, rest, 3);
    return MethodSpec::des_loc(k[0], k[1], k[2]);
  }
  if (name == "favg_plus_opt") return MethodSpec::favg_plus_opt(parse_periods(text, rest, 1)[0]);
  if (name == "favg_minus_opt") return MethodSpec::favg_minus_opt(parse_periods(text, rest, 1)[0]);
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string method_label(const MethodSpec& m) {
  switch (m.kind) {
    case MethodSpec::Kind::Ddp: return "ddp";
    case MethodSpec::Kind::LocalAdam: return "local_adam:" + std::to_string(m.k);
    case MethodSpec::Kind::DesLoc:
      return "des_loc:" + std::to_string(m.kx) + ":" + std::to_string(m.ku) + ":" +
             std::to_string(m.kv);
    case MethodSpec::Kind::FavgPlusOpt: return "favg_plus_opt:" + std::to_string(m.k);
    case MethodSpec::Kind::FavgMinusOpt: return "favg_minus_opt:" + std::to_string(m.k);
  }
  return "?";
}

SyncPolicySet method_policies(const MethodSpec& m) {
  SyncPolicySet set;
  switch (m.kind) {
    case MethodSpec::Kind::Ddp:
      set.params = SyncPolicy::periodic(1);
      set.first_moment = SyncPolicy::periodic(1);
      set.second_moment = SyncPolicy::periodic(1);
      set.accounting = PayloadAccounting::GradientAllreduce;
      break;
    case MethodSpec::Kind::LocalAdam:
      set.params = SyncPolicy::periodic(m.k);
      set.first_moment = SyncPolicy::periodic(m.k);
      set.second_moment = SyncPolicy::periodic(m.k);
      break;
    case MethodSpec::Kind::DesLoc:
      set.params = SyncPolicy::periodic(m.kx);
      set.first_moment = SyncPolicy::periodic(m.ku);
      set.second_moment = SyncPolicy::periodic(m.kv);
      break;
    case MethodSpec::Kind::FavgPlusOpt:
      set.params = SyncPolicy::periodic(m.k);
      set.first_moment = SyncPolicy::never();
      set.second_moment = SyncPolicy::never();
      break;
    case MethodSpec::Kind::FavgMinusOpt:
      set.params = SyncPolicy::periodic(m.k);
      set.first_moment = SyncPolicy::reset_with_params();
      set.second_moment = SyncPolicy::reset_with_params();
      break;
  }
  return set;
}

CostMethod method_cost(const MethodSpec& m) {
  switch (m.kind) {
    case MethodSpec::Kind::Ddp: return CostMethod::ddp();
    case MethodSpec::Kind::LocalAdam: return CostMethod::local_adam(static_cast<double>(m.k));
    case MethodSpec::Kind::DesLoc:
      return CostMethod::des_loc(static_cast<double>(m.kx), static_cast<double>(m.ku),
                                 static_cast<double>(m.kv));
    case MethodSpec::Kind::FavgPlusOpt:
    case MethodSpec::Kind::FavgMinusOpt:
      return CostMethod::fedavg(static_cast<double>(m.k));
  }
  return CostMethod::ddp();
}

}  // namespace desloc
