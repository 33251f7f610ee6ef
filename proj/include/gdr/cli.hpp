#pragma once

// Configuration-driven front end: a JSON run description is parsed into a
// RunConfig, then executed as a simulation, a quotient study or a scheme
// comparison.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gdr/dgrad.hpp"
#include "gdr/integrator.hpp"
#include "gdr/model.hpp"
#include "gdr/systems.hpp"

namespace gdr {

class SchemaError : public std::invalid_argument {
 public:
  SchemaError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class RangeError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

enum class Command { Run, Quotient, Compare };

std::string_view to_string(Command c);

enum class SystemType { Example1, Example2, LinearOscillator, SpringNetwork };

struct ParticleSpec {
  double mass = 1.0;
  Vec3 position{};
  Vec3 velocity{};
};

struct PointLoad {
  std::size_t particle = 0;
  Vec3 force{};
};

struct SpringNetworkSpec {
  /// Preset topology; when absent the explicit lists are used.
  std::optional<SpringDemoOptions> preset;
  std::vector<ParticleSpec> particles;
  std::vector<Spring> springs;
  std::vector<PointLoad> loads;
  std::vector<std::pair<double, double>> pulse;
  KernelMode kernel = KernelMode::Parallel;
};

struct SystemSpec {
  SystemType type = SystemType::Example1;
  // linear_oscillator
  SymMat M;
  SymMat K;
  Vec q0;
  Vec s0;
  SpringNetworkSpec network;
};

struct QuotientOptions {
  /// Sample spacing; 0 picks about 500 samples over the run.
  double sample_every = 0.0;
};

struct RunConfig {
  Command command = Command::Run;
  SystemSpec system;
  ForceScheme scheme;
  SolverConfig solver;
  double duration = 0.0;
  std::string output = "gdr_output.csv";
  QuotientOptions quotient;
};

/// Parses and validates a JSON document. Unknown keys are rejected; missing
/// solver and duration entries default to the catalog values of the chosen
/// system.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Replaces the seed of a random spring preset.
void apply_seed(RunConfig& cfg, std::uint64_t seed);

struct BuiltSystem {
  std::unique_ptr<SystemModel> system;
  State initial;
  /// Non-null when the system has an exact solution.
  const LinearOscillator* oscillator = nullptr;
  /// Time after which no load acts.
  double load_end = 0.0;
};

BuiltSystem build_system(const RunConfig& cfg);

struct RunSummary {
  std::size_t steps = 0;
  double final_energy = 0.0;
  double max_energy_drift = 0.0;
  bool has_momenta = false;
  Vec3 final_l{};
  Vec3 final_j{};
  /// Drift measured from the first record at or after load_end.
  double max_l_drift = 0.0;
  double max_j_drift = 0.0;
  double mean_iters = 0.0;
  double max_balance_residual = 0.0;
  std::size_t degenerate_steps = 0;
};

/// Writes the CSV and `<output>.summary.json`; prints a summary to `out`.
RunSummary run_simulation(const RunConfig& cfg, std::ostream& out);

struct QuotientSummary {
  std::size_t samples = 0;
  double median_log2_II = 0.0;
  double mask_rate_II = 0.0;
  std::size_t masked_II = 0;
  bool has_Q_I = false;
  double median_log2_I = 0.0;
  double mask_rate_I = 0.0;
  std::size_t masked_I = 0;
};

QuotientSummary run_quotient(const RunConfig& cfg, std::ostream& out);

struct CompareRow {
  SchemeVariant variant = SchemeVariant::NewConservative;
  /// "ok", "failed" or "skipped".
  std::string status;
  std::string message;
  double max_energy_drift = 0.0;
  double max_l_drift = 0.0;
  double max_j_drift = 0.0;
  double mean_iters = 0.0;
};

std::vector<CompareRow> run_compare(const RunConfig& cfg, std::ostream& out);

/// Column names of the simulation CSV for a system of dimension n.
std::vector<std::string> csv_header(std::size_t n);

}  // namespace gdr
