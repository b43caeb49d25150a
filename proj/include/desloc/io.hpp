#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "desloc/metrics.hpp"

namespace desloc {

// Shortest decimal string that parses back to exactly the same double.
// Byte-identical reruns depend on this formatting.
std::string format_double(double value);

inline constexpr const char* kCsvHeader =
    "step,round,worker_count,loss_mean,grad_norm_mean,param_norm_mean,dist_to_opt,"
    "rel_change_u,rel_change_v,drift_u_observed,drift_u_bound,drift_v_observed,"
    "drift_v_bound,cum_payload_units,eta";

// Undefined markers serialize as empty CSV fields / JSON nulls. The optional
// key column prefixes every row (used by method comparisons).
void write_csv_header(std::ostream& out, const std::string& key_column = "");
void write_csv_rows(std::ostream& out, std::span<const MetricsRow> rows,
                    const std::string& key_value = "");
void write_csv(std::ostream& out, std::span<const MetricsRow> rows,
               const std::string& key_column = "", const std::string& key_value = "");
void write_json(std::ostream& out, std::span<const MetricsRow> rows);

// Re-parses write_json output.
std::vector<MetricsRow> parse_json_rows(std::istream& in);

}  // namespace desloc
