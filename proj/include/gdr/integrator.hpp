#pragma once

// Implicit one-step integrator. The unknowns (q_{n+1}, s_{n+1}) solve
//
//   r_s = M (q_{n+1} − q_n)/Δt − M s(s_n, s_{n+1})                       = 0
//   r_q = M (s_{n+1} − s_n)/Δt + f(q_n, q_{n+1}) − f_ext(q_{n+½}, t_{n+½}) = 0
//
// by Newton–Raphson with a finite-difference Jacobian.

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdr/dgrad.hpp"
#include "gdr/linalg.hpp"
#include "gdr/model.hpp"

namespace gdr {

enum class JacobianMode { FiniteDifference, AnalyticIfAvailable };

struct SolverConfig {
  double dt = 1e-3;
  double rel_tol = 1e-10;
  int max_iters = 50;
  JacobianMode jacobian = JacobianMode::FiniteDifference;

  void validate() const;
};

/// step_index is the index of the record the failed step would have
/// produced, so the first step is 1.
class NewtonDiverged : public std::runtime_error {
 public:
  NewtonDiverged(std::size_t step_index, double residual_norm);
  std::size_t step_index() const { return step_; }
  double residual_norm() const { return residual_; }

 private:
  std::size_t step_;
  double residual_;
};

class SingularJacobian : public std::runtime_error {
 public:
  explicit SingularJacobian(std::size_t step_index);
  std::size_t step_index() const { return step_; }

 private:
  std::size_t step_;
};

struct StepReport {
  State state;
  int iters = 0;
  double residual_norm = 0.0;
  double energy = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  /// ⟨f_ext(q_{n+½}, t_{n+½}), Δq⟩ for the step that produced this record.
  double work_ext = 0.0;
  double diss_f = 0.0;
  double diss_s = 0.0;
  bool degenerate_fallback = false;
};

struct Residual {
  Vec r_s;
  Vec r_q;
};

/// Record for a state that was not produced by a step (iters = 0, no work).
StepReport initial_record(const SystemModel& sys, const State& state);

/// A scheme bound to a system and step size. The dissipation scale h is
/// taken from cfg.dt. Holds references; the system must outlive it.
class Stepper {
 public:
  Stepper(const SystemModel& sys, ForceScheme scheme, SolverConfig cfg);

  Residual residual(const State& prev, const State& trial) const;
  StepReport step(const State& prev, std::size_t step_index = 0) const;

  const SolverConfig& config() const { return cfg_; }
  const ForceScheme& scheme() const { return scheme_; }

 private:
  struct Evaluation;
  Evaluation evaluate(const State& prev, const Endpoint& x, const Vec& u) const;
  Mat jacobian(const State& prev, const Endpoint& x, const Vec& u, const Vec& r) const;
  bool analytic_jacobian() const;

  const SystemModel& sys_;
  ForceScheme scheme_;
  SolverConfig cfg_;
};

Residual residual(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg, const State& prev,
                  const State& trial);
StepReport step(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg, const State& prev);

struct Trajectory {
  std::vector<StepReport> records;
};

/// Number of uniform steps from t0 to t_end; throws std::invalid_argument
/// when the interval is not an integer multiple of dt.
std::size_t step_count(double t0, double t_end, double dt);

using StepObserver = std::function<void(std::size_t index, const StepReport& report)>;

/// Streams every record including the initial one (index 0). The state time
/// of record n is exactly t0 + n·dt.
void integrate(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg, const State& initial,
               double t_end, const StepObserver& observer);

Trajectory integrate(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg,
                     const State& initial, double t_end);

}  // namespace gdr
