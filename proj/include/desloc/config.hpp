#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "desloc/costmodel.hpp"
#include "desloc/sim.hpp"

namespace desloc {

// Schema violation or missing input; the message names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { Csv, Json };

struct OutputOptions {
  OutputFormat format = OutputFormat::Csv;
  std::string path;  // empty: stream to stdout
};

// File form of a full experiment: simulation setup, output options, and an
// optional cost-model block. Unknown keys are rejected.
struct ExperimentConfig {
  SimConfig sim;
  OutputOptions output;
  std::optional<CostModelParams> cost_model;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

// Cost-model block parser shared by the standalone cost command.
CostModelParams parse_cost_model_config(std::istream& in);

}  // namespace desloc
