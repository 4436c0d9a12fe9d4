#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lorentzflow/scenario.hpp"

using namespace lorentzflow;

namespace {

int cmd_run(const std::string& path) {
  const ScenarioConfig cfg = load_config(path);
  const RunReport r = run_scenario(cfg);
  std::cout << "output_dir = " << r.output_dir << '\n';
  r.monitors.write_summary(std::cout);
  if (r.exit_code != kExitOk && !r.message.empty()) std::cerr << "lorentzflow: " << r.message << '\n';
  return r.exit_code;
}

int cmd_check(const std::string& path) {
  const ScenarioConfig cfg = load_config(path);
  const BoundaryCheck c = check_boundary(cfg);
  std::cout << "profile = " << cfg.profile << '\n' << "chart = " << cfg.chart << '\n';
  c.write(std::cout);
  return c.ok ? kExitOk : kExitCondition;
}

int cmd_converge(const std::string& path, int levels) {
  const ScenarioConfig cfg = load_config(path);
  const ConvergenceTable t = convergence_study(cfg, levels);
  t.write_csv(std::cout);
  const std::string dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "convergence.csv");
  t.write_csv(out);
  if (!out) throw std::runtime_error("cannot write convergence.csv in " + dir);
  return kExitOk;
}

int cmd_batch(const std::string& dir, unsigned workers) {
  const auto items = run_batch(dir, workers);
  int worst = kExitOk;
  for (const auto& it : items) {
    std::cout << it.exit_code << ' ' << it.config_path;
    if (!it.message.empty()) std::cout << "  # " << it.message;
    std::cout << '\n';
    worst = std::max(worst, it.exit_code);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean curvature flow of spacelike graphs with a free boundary"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "run a scenario and write its outputs");
  run->add_option("config", config, "scenario config file")->required()->check(CLI::ExistingFile);

  auto* check = app.add_subcommand("check-boundary", "check the curvature condition and chart compatibility");
  check->add_option("config", config, "scenario config file")->required()->check(CLI::ExistingFile);

  int levels = 3;
  auto* conv = app.add_subcommand("converge", "convergence study against the closed-form solution");
  conv->add_option("config", config, "scenario config file")->required()->check(CLI::ExistingFile);
  conv->add_option("--levels", levels, "number of refinement levels")->check(CLI::Range(1, 8));

  std::string dir;
  unsigned workers = 0;
  auto* batch = app.add_subcommand("batch", "run every *.cfg in a directory concurrently");
  batch->add_option("dir", dir, "directory of configs")->required()->check(CLI::ExistingDirectory);
  batch->add_option("--workers", workers, "worker threads (0: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config);
    if (*check) return cmd_check(config);
    if (*conv) return cmd_converge(config, levels);
    return cmd_batch(dir, workers);
  } catch (const ConfigError& e) {
    std::cerr << "lorentzflow: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "lorentzflow: " << e.what() << '\n';
    return kExitRuntime;
  }
}
