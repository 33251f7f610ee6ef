#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gdr/dgrad.hpp"
#include "gdr/integrator.hpp"
#include "gdr/linalg.hpp"
#include "gdr/model.hpp"

namespace gdr {

struct MomentaSample {
  Vec3 l{};
  Vec3 j{};
  double E = 0.0;
  double T = 0.0;
  double V = 0.0;
  double t = 0.0;
  /// False for systems whose coordinates are not particle positions; l and
  /// j are then zero and meaningless.
  bool has_momenta = false;
};

/// l = Σ π_i and j = Σ q_i × π_i with π = M s, plus the energies.
MomentaSample momenta(const SystemModel& sys, const State& state);

/// (ΔT + ΔV) − (W_ext − D_f − D_s) for one step.
double energy_balance_residual(const StepReport& report, const MomentaSample& prev);

class GridMisaligned : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct QuotientSeries {
  std::vector<double> times;
  /// NaN on masked samples.
  std::vector<double> Q;
  std::vector<double> log2Q;
  std::vector<bool> masked;

  std::size_t size() const { return times.size(); }
  std::size_t masked_count() const;
  double mask_rate() const;
  /// Median of log2Q over unmasked samples; NaN when every sample is masked.
  double median_log2() const;
};

/// Stacked state ξ = (q, s) at each requested time for a run with step h.
using QuotientRunner = std::function<std::vector<Vec>(double h, const std::vector<double>& t_samples)>;
/// Exact ξ(t).
using ExactSolution = std::function<Vec(double t)>;

/// Relative denominator threshold for masking.
inline constexpr double kQuotientMask = 1e-13;

/// Q_I(t) = ‖ξ_h − ξ‖ / ‖ξ_{h/2} − ξ‖.
QuotientSeries quotient_I(const ExactSolution& reference, const QuotientRunner& runner, double h,
                          const std::vector<double>& t_samples, double t0 = 0.0);

/// Q_II(t) = ‖ξ_h − ξ_{h/2}‖ / ‖ξ_{h/2} − ξ_{h/4}‖. The three runs are
/// executed concurrently, so the runner must be safe to call from several
/// threads.
QuotientSeries quotient_II(const QuotientRunner& runner, double h, const std::vector<double>& t_samples,
                           double t0 = 0.0);

/// Throws GridMisaligned unless every sample lies on the grid t0 + k·h.
void check_sample_grid(const std::vector<double>& t_samples, double h, double t0);

/// Runner that integrates `initial` with the given scheme at step h.
QuotientRunner make_integrator_runner(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& base,
                                      const State& initial);

/// Samples t0 + k·every for k = 0, 1, ... up to t0 + duration.
std::vector<double> uniform_samples(double t0, double duration, double every);

}  // namespace gdr
