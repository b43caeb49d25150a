#include "desloc/io.hpp"

#include <charconv>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace desloc {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

}  // namespace

void write_csv_header(std::ostream& out, const std::string& key_column) {
  if (!key_column.empty()) out << key_column << ',';
  out << kCsvHeader << '\n';
}

void write_csv_rows(std::ostream& out, std::span<const MetricsRow> rows,
                    const std::string& key_value) {
  for (const MetricsRow& r : rows) {
    if (!key_value.empty()) out << key_value << ',';
    out << r.step << ',' << r.round << ',' << r.worker_count << ','
        << format_double(r.loss_mean) << ',' << format_double(r.grad_norm_mean) << ','
        << format_double(r.param_norm_mean) << ',';
    put(out, r.dist_to_opt);
    out << ',';
    put(out, r.rel_change_u);
    out << ',';
    put(out, r.rel_change_v);
    out << ',';
    put(out, r.drift_u_observed);
    out << ',';
    put(out, r.drift_u_bound);
    out << ',';
    put(out, r.drift_v_observed);
    out << ',';
    put(out, r.drift_v_bound);
    out << ',' << r.cum_payload_units << ',' << format_double(r.eta) << '\n';
  }
}

void write_csv(std::ostream& out, std::span<const MetricsRow> rows,
               const std::string& key_column, const std::string& key_value) {
  write_csv_header(out, key_column);
  write_csv_rows(out, rows, key_value);
}

namespace {

nlohmann::json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::optional<double> opt_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void write_json(std::ostream& out, std::span<const MetricsRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MetricsRow& r : rows) {
    arr.push_back({{"step", r.step},
                   {"round", r.round},
                   {"worker_count", r.worker_count},
                   {"loss_mean", r.loss_mean},
                   {"grad_norm_mean", r.grad_norm_mean},
                   {"param_norm_mean", r.param_norm_mean},
                   {"dist_to_opt", opt_to_json(r.dist_to_opt)},
                   {"rel_change_u", opt_to_json(r.rel_change_u)},
                   {"rel_change_v", opt_to_json(r.rel_change_v)},
                   {"drift_u_observed", opt_to_json(r.drift_u_observed)},
                   {"drift_u_bound", opt_to_json(r.drift_u_bound)},
                   {"drift_v_observed", opt_to_json(r.drift_v_observed)},
                   {"drift_v_bound", opt_to_json(r.drift_v_bound)},
                   {"cum_payload_units", r.cum_payload_units},
                   {"eta", r.eta}});
  }
  out << arr.dump(2) << '\n';
}

std::vector<MetricsRow> parse_json_rows(std::istream& in) {
  nlohmann::json arr = nlohmann::json::parse(in);
  if (!arr.is_array()) throw std::invalid_argument("expected a top-level array of rows");
  std::vector<MetricsRow> rows;
  rows.reserve(arr.size());
  for (const nlohmann::json& j : arr) {
    MetricsRow r;
    r.step = j.at("step").get<std::uint64_t>();
    r.round = j.at("round").get<std::uint64_t>();
    r.worker_count = j.at("worker_count").get<std::uint32_t>();
    r.loss_mean = j.at("loss_mean").get<double>();
    r.grad_norm_mean = j.at("grad_norm_mean").get<double>();
    r.param_norm_mean = j.at("param_norm_mean").get<double>();
    r.dist_to_opt = opt_from_json(j.at("dist_to_opt"));
    r.rel_change_u = opt_from_json(j.at("rel_change_u"));
    r.rel_change_v = opt_from_json(j.at("rel_change_v"));
    r.drift_u_observed = opt_from_json(j.at("drift_u_observed"));
    r.drift_u_bound = opt_from_json(j.at("drift_u_bound"));
    r.drift_v_observed = opt_from_json(j.at("drift_v_observed"));
    r.drift_v_bound = opt_from_json(j.at("drift_v_bound"));
    r.cum_payload_units = j.at("cum_payload_units").get<std::uint64_t>();
    r.eta = j.at("eta").get<double>();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace desloc
