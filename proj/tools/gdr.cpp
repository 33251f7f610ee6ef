#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gdr/cli.hpp"
#include "gdr/systems.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-consistent implicit time integration"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  std::uint64_t seed = 0;
  for (const char* name : {"run", "quotient", "compare"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run description")->required();
    sub->add_option("--output", output, "CSV output path (overrides the config)");
    sub->add_option("--seed", seed, "seed for randomly generated test systems");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  gdr::RunConfig cfg;
  try {
    cfg = gdr::load_config(config_path);
    if (!output.empty()) cfg.output = output;
    if (app.get_subcommands().front()->count("--seed")) gdr::apply_seed(cfg, seed);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (command == "run") {
      gdr::run_simulation(cfg, std::cout);
    } else if (command == "quotient") {
      gdr::run_quotient(cfg, std::cout);
    } else {
      const auto rows = gdr::run_compare(cfg, std::cout);
      if (std::any_of(rows.begin(), rows.end(), [](const gdr::CompareRow& r) { return r.status == "failed"; })) {
        return kSolverError;
      }
    }
  } catch (const gdr::NewtonDiverged& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverError;
  } catch (const gdr::SingularJacobian& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverError;
  } catch (const gdr::SpringCollapse& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverError;
  } catch (const gdr::DegenerateDenominator& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
