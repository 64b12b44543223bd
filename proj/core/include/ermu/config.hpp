#pragma once

#include "ermu/universality.hpp"

#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ermu {

struct SweepSettings {
  bool enabled = false;
  std::vector<double> s_grid = {-0.1, -0.01, 0.01, 0.1};
  int instances = 4;
  Index n_test = 4000;
  int base_size = 0;  ///< 0: smallest ladder entry of each family
};

struct FreeEnergySettings {
  bool enabled = false;
  std::size_t candidates = 256;
  double alpha = 0.5;
  std::vector<double> beta_grid = {0.1, 1.0, 10.0, 100.0};
  double path_beta = 10.0;
  int path_points = 10;
  /// Near-minimizer levels as offsets above the ERM value; inf is allowed.
  std::vector<double> t_offsets = {0.0, 0.01, 0.05, std::numeric_limits<double>::infinity()};
  Index n_test = 4000;
  int base_size = 0;
};

struct ExperimentConfig {
  CampaignConfig campaign;
  SweepSettings sweep;
  FreeEnergySettings free_energy;
  std::string output_dir = "ermu-out";
};

/// Configuration problem with its source position (line/column are 1-based;
/// 0 when unknown) and the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string field, int line, int column);
  const std::string& field() const { return field_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string field_;
  int line_;
  int column_;
};

/// Parses and validates a YAML document. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError naming the first invalid field.
void validate_config(const ExperimentConfig& config);

/// Canonical YAML with every field explicit; parse_config(serialize_config(c))
/// reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// SHA-256 (hex) of the canonical serialization.
std::string config_hash(const ExperimentConfig& config);

}  // namespace ermu
