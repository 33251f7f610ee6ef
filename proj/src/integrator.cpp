#include "gdr/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gdr {

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SolverConfig: dt must be positive");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("SolverConfig: rel_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be at least 1");
}

NewtonDiverged::NewtonDiverged(std::size_t step_index, double residual_norm)
    : std::runtime_error("Newton iteration failed to converge at step " + std::to_string(step_index) +
                         " (residual norm " + std::to_string(residual_norm) + ")"),
      step_(step_index),
      residual_(residual_norm) {}

SingularJacobian::SingularJacobian(std::size_t step_index)
    : std::runtime_error("singular Newton Jacobian at step " + std::to_string(step_index)), step_(step_index) {}

StepReport initial_record(const SystemModel& sys, const State& state) {
  StepReport r;
  r.state = state;
  r.kinetic = sys.kinetic_energy(state.s);
  r.potential = sys.potential(state.q);
  r.energy = r.kinetic + r.potential;
  return r;
}

struct Stepper::Evaluation {
  Vec r;
  ForceEvaluation force;
  VelocityEvaluation velocity;
  double work_ext = 0.0;
};

Stepper::Stepper(const SystemModel& sys, ForceScheme scheme, SolverConfig cfg)
    : sys_(sys), scheme_(std::move(scheme)), cfg_(cfg) {
  cfg_.validate();
  scheme_.dissipation.h = cfg_.dt;
  scheme_.validate(sys_);
}

Stepper::Evaluation Stepper::evaluate(const State& prev, const Endpoint& x, const Vec& u) const {
  const std::size_t n = sys_.dim();
  const SymMat& M = sys_.mass();
  const double dt = cfg_.dt;
  const Vec q1 = head(u, n);
  const Vec s1 = tail(u, n);

  Evaluation ev;
  ev.velocity = velocity_evaluation(M, scheme_.dissipation, prev.s, s1);
  ev.force = discrete_force(sys_, scheme_, x, make_endpoint(sys_, q1, scheme_.variant));

  const Vec dq = q1 - prev.q;
  Vec r_s = M * ((1.0 / dt) * dq - ev.velocity.s);
  Vec r_q = (1.0 / dt) * (M * (s1 - prev.s)) + ev.force.force;
  if (sys_.has_external_force()) {
    const Vec fext = sys_.external_force(0.5 * (prev.q + q1), prev.t + 0.5 * dt);
    r_q -= fext;
    ev.work_ext = dot(fext, dq);
  }
  ev.r = stack(r_s, r_q);
  return ev;
}

bool Stepper::analytic_jacobian() const {
  if (cfg_.jacobian != JacobianMode::AnalyticIfAvailable) return false;
  if (scheme_.variant != SchemeVariant::Average && scheme_.variant != SchemeVariant::Midpoint) return false;
  if (scheme_.dissipation.chi_s != 0.0 || scheme_.dissipation.chi_f != 0.0) return false;
  return !sys_.has_external_force();
}

Mat Stepper::jacobian(const State& prev, const Endpoint& x, const Vec& u, const Vec& r) const {
  const std::size_t n = sys_.dim();
  const std::size_t m = 2 * n;
  const double dt = cfg_.dt;

  if (analytic_jacobian()) {
    const Vec q1 = head(u, n);
    const Vec qh = scheme_.variant == SchemeVariant::Midpoint ? 0.5 * (prev.q + q1) : q1;
    if (const auto H = sys_.analytic_hessian(qh)) {
      const SymMat& M = sys_.mass();
      Mat J(m, m);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          J(i, j) = M(i, j) / dt;
          J(i, n + j) = -0.5 * M(i, j);
          J(n + i, j) = 0.5 * (*H)(i, j);
          J(n + i, n + j) = M(i, j) / dt;
        }
      }
      return J;
    }
  }

  const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  Mat J(m, m);
  Vec up = u;
  for (std::size_t j = 0; j < m; ++j) {
    const double delta = root_eps * std::max(1.0, std::abs(u[j]));
    up[j] = u[j] + delta;
    const double actual = up[j] - u[j];
    const Vec rp = evaluate(prev, x, up).r;
    for (std::size_t i = 0; i < m; ++i) J(i, j) = (rp[i] - r[i]) / actual;
    up[j] = u[j];
  }
  return J;
}

Residual Stepper::residual(const State& prev, const State& trial) const {
  const std::size_t n = sys_.dim();
  if (prev.q.size() != n || prev.s.size() != n || trial.q.size() != n || trial.s.size() != n) {
    throw DimensionMismatch("residual: state dimension does not match system");
  }
  const Endpoint x = make_endpoint(sys_, prev.q, scheme_.variant);
  const Vec r = evaluate(prev, x, stack(trial.q, trial.s)).r;
  return {head(r, n), tail(r, n)};
}

StepReport Stepper::step(const State& prev, std::size_t step_index) const {
  const std::size_t n = sys_.dim();
  if (prev.q.size() != n || prev.s.size() != n) throw DimensionMismatch("step: state dimension does not match system");
  const Endpoint x = make_endpoint(sys_, prev.q, scheme_.variant);

  Vec u = stack(prev.q + cfg_.dt * prev.s, prev.s);
  Evaluation ev = evaluate(prev, x, u);
  double rnorm = norm(ev.r);
  const double scale = std::max(1.0, rnorm);
  int iters = 0;
  while (!(rnorm / scale <= cfg_.rel_tol)) {
    if (iters >= cfg_.max_iters || !std::isfinite(rnorm)) throw NewtonDiverged(step_index, rnorm);
    const Mat J = jacobian(prev, x, u, ev.r);
    Vec du;
    try {
      du = LU(J).solve(-1.0 * ev.r);
    } catch (const Singular&) {
      throw SingularJacobian(step_index);
    }
    u += du;
    ev = evaluate(prev, x, u);
    rnorm = norm(ev.r);
    ++iters;
  }

  StepReport rep;
  rep.state = State{head(u, n), tail(u, n), prev.t + cfg_.dt};
  rep.iters = iters;
  rep.residual_norm = rnorm;
  rep.kinetic = sys_.kinetic_energy(rep.state.s);
  rep.potential = sys_.potential(rep.state.q);
  rep.energy = rep.kinetic + rep.potential;
  rep.work_ext = ev.work_ext;
  rep.diss_f = ev.force.diss_f;
  rep.diss_s = ev.velocity.diss_s;
  rep.degenerate_fallback = ev.force.degenerate;
  return rep;
}

Residual residual(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg, const State& prev,
                  const State& trial) {
  return Stepper(sys, scheme, cfg).residual(prev, trial);
}

StepReport step(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg, const State& prev) {
  return Stepper(sys, scheme, cfg).step(prev);
}

std::size_t step_count(double t0, double t_end, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_count: dt must be positive");
  if (t_end < t0) throw std::invalid_argument("step_count: t_end precedes the initial time");
  const double ratio = (t_end - t0) / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, steps)) {
    throw std::invalid_argument("step_count: duration is not an integer multiple of dt");
  }
  return static_cast<std::size_t>(steps);
}

void integrate(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg, const State& initial,
               double t_end, const StepObserver& observer) {
  const Stepper stepper(sys, scheme, cfg);
  const std::size_t steps = step_count(initial.t, t_end, cfg.dt);
  const double t0 = initial.t;
  State state = initial;
  observer(0, initial_record(sys, state));
  for (std::size_t k = 1; k <= steps; ++k) {
    StepReport rep = stepper.step(state, k);
    rep.state.t = t0 + static_cast<double>(k) * cfg.dt;
    state = rep.state;
    observer(k, rep);
  }
}

Trajectory integrate(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& cfg,
                     const State& initial, double t_end) {
  Trajectory traj;
  integrate(sys, scheme, cfg, initial, t_end,
            [&](std::size_t, const StepReport& rep) { traj.records.push_back(rep); });
  return traj;
}

}  // namespace gdr
