#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "risac/schemes.hpp"

namespace risac {

/// Thrown by the config reader; carries line/field diagnostics in what().
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Full experiment description, mirroring the paper's simulation-parameter
/// table. Angles are stored in radians and powers/gains in linear scale;
/// the config file carries `deg`, `dB`, `dBm`, `m` suffixes and is converted
/// on ingestion.
struct ScenarioConfig {
  std::vector<UserGeometry> users;
  std::vector<UserGeometry> eavesdroppers;
  SensingGeometry sensing;
  ArrayConfig array;
  std::vector<double> user_noise;    // sigma_k^2, watts
  std::vector<double> eaves_noise;   // sigma_m^2, watts
  AlgorithmConfig algorithm;
  std::uint64_t seed = 1;

  void validate(bool allow_no_eaves = false) const;
  SolveScenario build() const;
};

/// The shipped reference scenario (three users, two eavesdroppers, two
/// targets, 12x12 array).
ScenarioConfig table3_scenario();

/// Reads and fully validates a scenario file. Unknown keys are rejected;
/// parse errors name the line and field.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(std::istream& in, const std::string& origin = "<stream>");

/// Writes a config that load_scenario reads back identically.
void save_scenario(const ScenarioConfig& config, const std::string& path);
void write_scenario(const ScenarioConfig& config, std::ostream& out);

}  // namespace risac
