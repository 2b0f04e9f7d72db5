#pragma once

#include <stdexcept>
#include <string>

#include "lekf/harness.hpp"

namespace lekf {

/// Malformed or invalid configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a JSON configuration with sections
///   trajectory, noise, initial_covariance, filters, output.
/// Every section and key is optional; unknown keys are an error.
harness::ExperimentConfig parse_config(const std::string& json_text);
harness::ExperimentConfig load_config(const std::string& path);

/// Full configuration (all keys, defaults filled in) as pretty JSON.
std::string config_to_json(const harness::ExperimentConfig& cfg);

}  // namespace lekf
