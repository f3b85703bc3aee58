#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "scenario.hpp"

using namespace qsnegf::cli;

namespace {

int run_command(const std::string& config_path, const std::string& scenario, const std::optional<std::string>& out,
                std::optional<int> n_theta, std::optional<int> u_steps, const std::optional<std::string>& alpha_grid,
                std::optional<int> threads, bool check) {
  ScenarioConfig cfg = config_path.empty() ? default_config(scenario) : load_config(config_path, scenario);
  if (!config_path.empty() && !scenario.empty() && cfg.scenario != scenario)
    throw ConfigError("--scenario", "config names '" + cfg.scenario + "' but --scenario asks for '" + scenario + "'");
  if (out) cfg.out = *out;
  if (n_theta) {
    if (*n_theta < 1) throw ConfigError("--n-theta", "must be positive");
    cfg.n_theta = *n_theta;
  }
  if (u_steps) {
    if (*u_steps < 1) throw ConfigError("--u-steps", "must be positive");
    cfg.u_steps = *u_steps;
  }
  if (alpha_grid) {
    try {
      cfg.alphas = parse_grid(*alpha_grid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("--alpha-grid", e.what());
    }
    for (double a : cfg.alphas)
      if (a < 0.0 || a > 1.0) throw ConfigError("--alpha-grid", "values must lie in [0, 1]");
  }
  if (threads) cfg.threads = *threads;

  const ScenarioOutput result = run_scenario(cfg);
  write_outputs(result, cfg.out);
  for (const Table& t : result.tables) std::cout << (cfg.out / (t.name + ".csv")).string() << "\n";
  std::cout << (cfg.out / "report.json").string() << "\n";
  std::size_t failed = 0;
  for (const Check& c : result.checks) {
    if (!c.pass()) ++failed;
    if (check || !c.pass())
      std::printf("%-4s %-44s value=%.6g tol=%.3g\n", c.pass() ? "ok" : "FAIL", c.name.c_str(), c.value, c.tolerance);
  }
  std::cout << result.scenario << ": " << (failed == 0 ? "pass" : "FAIL") << " (" << result.checks.size() - failed
            << "/" << result.checks.size() << " checks)\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-static NEGF thermodynamics scenarios"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario and write CSVs plus report.json");
  std::string config_path;
  std::string scenario;
  std::optional<std::string> out;
  std::optional<int> n_theta;
  std::optional<int> u_steps;
  std::optional<std::string> alpha_grid;
  std::optional<int> threads;
  bool check = false;
  run->add_option("config", config_path, "JSON config (merged over the scenario's defaults)")->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "Built-in scenario name");
  run->add_option("--out", out, "Output directory");
  run->add_option("--n-theta", n_theta, "Nominal quadrature nodes per band segment");
  run->add_option("--u-steps", u_steps, "Protocol steps per segment");
  run->add_option("--alpha-grid", alpha_grid, "alpha values as start:end:step");
  run->add_option("--threads", threads, "Worker threads (0 = hardware count)");
  run->add_flag("--check", check, "Print every check, not only failures");

  auto* list = app.add_subcommand("list", "List the built-in scenarios");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& name : scenario_names()) std::cout << name << "\n";
    return 0;
  }
  if (config_path.empty() && scenario.empty()) {
    std::cerr << "error: give a config file or --scenario <name>\n";
    return 2;
  }
  try {
    return run_command(config_path, scenario, out, n_theta, u_steps, alpha_grid, threads, check);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
