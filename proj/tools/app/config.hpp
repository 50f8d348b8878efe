#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "io.hpp"
#include "mechanism.hpp"

namespace crowdauction::app {

/// Invalid configuration. `what()` reads `file:line:column: message`
/// (1-based) when the position is known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, int column, const std::string& message);
  explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_ = 0;
  int column_ = 0;
};

std::string_view to_string(OutputFormat f);
OutputFormat output_format_from_string(std::string_view s);

struct VerifyConfig {
  std::size_t scenarios = 200;
  std::size_t max_users = 12;
  ScenarioConfig scenario = default_scenario();
  double required_service = 20;       // online mechanisms
  double oms_service_fraction = 0.6;  // offline: R = fraction of reachable coverage
  std::size_t submodular_trials = 10000;
  std::size_t grid_points = 41;
  std::size_t sweep_max_users = 8;
  bool expected_truthful = false;

  static ScenarioConfig default_scenario();
};

struct ExperimentConfig {
  std::string source = "<defaults>";
  std::uint64_t seed = 1;
  std::size_t replications = 100;
  std::size_t workers = 1;
  Mechanism mechanism = Mechanism::sos;
  ScenarioConfig scenario;
  std::vector<double> arrival_rates = {0.465};
  std::vector<double> required_service = {200, 400, 600, 800, 1000,
                                          1200, 1400, 1600, 1800, 2000};
  std::vector<double> deltas = {6};
  RunSpec spec;  // mechanism parameters; required_service and delta set per point
  double gamma = 1;
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::csv;
  bool write_decisions = true;
  bool write_run_documents = false;
  VerifyConfig verify;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Parses a YAML experiment file. Unknown keys and ill-typed or
/// out-of-range values are rejected with their position.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;
  std::optional<OutputFormat> format;
};
void apply(ExperimentConfig& config, const Overrides& o);

}  // namespace crowdauction::app
