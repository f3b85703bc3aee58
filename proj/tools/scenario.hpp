#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsnegf/protocol.hpp"

namespace qsnegf::cli {

/// Malformed or inconsistent configuration; `where` names the field or line.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

private:
  std::string where_;
};

struct ScenarioConfig {
  std::string scenario;
  double temperature = 0.02;
  double mu = 0.0;
  ModelKind model = ModelKind::resonant_level;
  std::map<std::string, double> params;
  ChainReservoir lead;
  /// Empty means the scenario's own default protocol(s).
  std::vector<ProtocolSegment> protocol;
  int n_theta = 400;
  int u_steps = 0;
  int threads = 0;
  std::vector<double> alphas;
  /// Named value lists swept by a scenario (V, eps2, t0, beta, T, L, ...).
  std::map<std::string, std::vector<double>> sweep;
  /// Overrides of the default check tolerances, by check name.
  std::map<std::string, double> tolerances;
  std::filesystem::path out = "out";

  Ensemble ensemble() const { return Ensemble(temperature, mu); }
  ModelDefinition model_definition() const;
  ProtocolOptions protocol_options() const;
  const std::vector<double>& values(const std::string& key) const;
  double tolerance(const std::string& check, double fallback) const;
};

/// Names of every built-in scenario, in a fixed order.
const std::vector<std::string>& scenario_names();

/// The built-in defaults for a scenario; throws ConfigError for unknown names.
ScenarioConfig default_config(const std::string& scenario);

/// Parses JSON text over the defaults of the scenario it names (or `fallback`).
ScenarioConfig parse_config(const std::string& text, const std::string& fallback = "");
ScenarioConfig load_config(const std::filesystem::path& path, const std::string& fallback = "");

/// start:end:step.
std::vector<double> parse_grid(const std::string& spec);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

enum class Relation {
  /// |value| <= tolerance
  below,
  /// value > tolerance
  above,
  /// |value - target| <= tolerance
  near,
};

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::below;
  double target = 0.0;

  bool pass() const;
};

struct ScenarioOutput {
  std::string scenario;
  std::vector<Table> tables;
  std::vector<Check> checks;

  bool pass() const;
};

ScenarioOutput run_scenario(const ScenarioConfig& cfg);

/// CSV with a header row, 17 significant digits, Unix newlines.
std::string format_csv(const Table& table);
std::string format_report(const ScenarioOutput& out);

/// Writes <out>/<table>.csv for every table and <out>/report.json.
void write_outputs(const ScenarioOutput& out, const std::filesystem::path& dir);

}  // namespace qsnegf::cli
