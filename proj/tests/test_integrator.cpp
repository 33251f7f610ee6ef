#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gdr/diagnostics.hpp"
#include "gdr/integrator.hpp"
#include "gdr/systems.hpp"

using namespace gdr;

namespace {

ForceScheme scheme_of(SchemeVariant v, DissipationConfig d = {}) {
  ForceScheme s;
  s.variant = v;
  s.dissipation = std::move(d);
  return s;
}

double max_abs(const Vec3& a) { return std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2])}); }

Vec3 minus(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

}  // namespace

TEST_CASE("residual vanishes at equilibrium") {
  const auto ex = make_example1();
  const State eq{Vec{0.0, 0.0}, Vec{0.0, 0.0}, 0.0};
  State next = eq;
  next.t = ex.solver.dt;
  for (auto v : {SchemeVariant::Average, SchemeVariant::Midpoint, SchemeVariant::NewConservative,
                 SchemeVariant::Gonzalez}) {
    const Residual r = residual(ex.system, scheme_of(v), ex.solver, eq, next);
    CHECK(norm(r.r_s) == 0.0);
    CHECK(norm(r.r_q) == 0.0);
  }
  const StepReport rep = step(ex.system, scheme_of(SchemeVariant::NewConservative), ex.solver, eq);
  CHECK(rep.state.q == eq.q);
  CHECK(rep.state.s == eq.s);
  CHECK(rep.iters <= 1);
}

TEST_CASE("one step on the harmonic oscillator is the midpoint rule") {
  const LinearOscillator osc(SymMat::identity(1), SymMat::identity(1));
  SolverConfig cfg;
  cfg.dt = 0.01;
  const State s0{Vec{1.0}, Vec{0.0}, 0.0};
  const double a = 0.5 * cfg.dt;
  const double q1 = ((1.0 - a * a) * 1.0 + 2.0 * a * 0.0) / (1.0 + a * a);
  const double s1 = ((1.0 - a * a) * 0.0 - 2.0 * a * 1.0) / (1.0 + a * a);
  CHECK(q1 == doctest::Approx(0.99995).epsilon(1e-7));
  CHECK(s1 == doctest::Approx(-0.0099999).epsilon(1e-4));
  for (auto v : {SchemeVariant::Midpoint, SchemeVariant::NewConservative, SchemeVariant::Gonzalez,
                 SchemeVariant::Average}) {
    const StepReport r = step(osc, scheme_of(v), cfg, s0);
    CHECK(std::abs(r.state.q[0] - q1) < 1e-13);
    CHECK(std::abs(r.state.s[0] - s1) < 1e-13);
    CHECK(r.state.t == cfg.dt);
  }
}

TEST_CASE("converged residual meets the tolerance") {
  const auto ex = make_example1();
  const Stepper stepper(ex.system, scheme_of(SchemeVariant::NewConservative, ex.dissipation), ex.solver);
  const StepReport rep = stepper.step(ex.initial);
  const Residual r = stepper.residual(ex.initial, rep.state);
  CHECK(norm(stack(r.r_s, r.r_q)) <= 1e-10 * std::max(1.0, rep.residual_norm) + 1e-10);
  CHECK(rep.residual_norm <= 1e-9);
}

TEST_CASE("dissipative steps balance energy") {
  const auto ex = make_example1();
  const ForceScheme scheme = scheme_of(SchemeVariant::NewConservative, ex.dissipation);
  const Trajectory traj = integrate(ex.system, scheme, ex.solver, ex.initial, 0.5);
  REQUIRE(traj.records.size() == 501);
  for (std::size_t n = 1; n < traj.records.size(); ++n) {
    const StepReport& prev = traj.records[n - 1];
    const StepReport& cur = traj.records[n];
    const double dE = cur.energy - prev.energy;
    CHECK(std::abs(dE + cur.diss_f + cur.diss_s) <= 1e-10 * std::max(1.0, std::abs(cur.energy)));
    CHECK(cur.diss_f > 0.0);
    CHECK(cur.diss_s >= 0.0);
    CHECK(dE <= 1e-12 * std::abs(prev.energy));
  }
}

TEST_CASE("analytic and finite-difference jacobians give the same trajectory") {
  const auto ex = make_example1();
  SolverConfig fd = ex.solver;
  SolverConfig an = ex.solver;
  an.jacobian = JacobianMode::AnalyticIfAvailable;
  for (auto v : {SchemeVariant::Midpoint, SchemeVariant::Average, SchemeVariant::NewConservative}) {
    const Trajectory a = integrate(ex.system, scheme_of(v), fd, ex.initial, 1.0);
    const Trajectory b = integrate(ex.system, scheme_of(v), an, ex.initial, 1.0);
    CHECK(norm(a.records.back().state.q - b.records.back().state.q) < 1e-11);
    CHECK(norm(a.records.back().state.s - b.records.back().state.s) < 1e-11);
  }
}

TEST_CASE("quadratic systems make all schemes coincide") {
  const SpringNetwork3D net({1.0, 2.0, 1.5}, {Spring{0, 1, 3.0, 0.0}, Spring{1, 2, 1.0, 0.0}, Spring{0, 2, 2.0, 0.0}});
  const State s0{Vec{0.0, 0.0, 0.0, 1.0, 0.2, 0.0, 0.3, 1.1, -0.4}, Vec{0.1, 0.0, 0.5, 0.0, -0.3, 0.2, 0.0, 0.0, 0.0}};
  SolverConfig cfg;
  cfg.dt = 0.01;
  const Trajectory ref = integrate(net, scheme_of(SchemeVariant::Midpoint), cfg, s0, 1.0);
  for (auto v : {SchemeVariant::Average, SchemeVariant::NewConservative, SchemeVariant::Gonzalez,
                 SchemeVariant::GEquivariant}) {
    const Trajectory t = integrate(net, scheme_of(v), cfg, s0, 1.0);
    CHECK_MESSAGE(norm(t.records.back().state.q - ref.records.back().state.q) < 1e-9, to_string(v));
  }
}

TEST_CASE("integration grid") {
  CHECK(step_count(0.0, 1.0, 0.1) == 10);
  CHECK(step_count(2.0, 2.0, 0.1) == 0);
  CHECK_THROWS_AS(step_count(0.0, 1.05, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(step_count(1.0, 0.0, 0.1), std::invalid_argument);

  const auto ex = make_example1();
  const Trajectory empty = integrate(ex.system, ForceScheme{}, ex.solver, ex.initial, 0.0);
  REQUIRE(empty.records.size() == 1);
  CHECK(empty.records[0].state.q == ex.initial.q);
  CHECK(empty.records[0].iters == 0);

  State start = ex.initial;
  start.t = 0.5;
  std::size_t count = 0;
  integrate(ex.system, ForceScheme{}, ex.solver, start, 0.6, [&](std::size_t k, const StepReport& r) {
    CHECK(k == count++);
    CHECK(r.state.t == 0.5 + static_cast<double>(k) * ex.solver.dt);
  });
  CHECK(count == 101);
}

TEST_CASE("solver configuration is validated") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dt = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.rel_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("newton failure is reported") {
  const auto ex = make_example2();
  SolverConfig cfg = ex.solver;
  cfg.dt = 1e-2;
  cfg.max_iters = 1;
  try {
    integrate(ex.system, ForceScheme{}, cfg, ex.initial, 1.0);
    FAIL("expected NewtonDiverged");
  } catch (const NewtonDiverged& e) {
    CHECK(e.step_index() == 1);
    CHECK(e.residual_norm() > 0.0);
  }
}

TEST_CASE("conservative runs preserve energy") {
  const auto ex = make_example2();
  const Trajectory t = integrate(ex.system, ForceScheme{}, ex.solver, ex.initial, 1.0);
  const double E0 = t.records.front().energy;
  double drift = 0.0;
  for (const auto& r : t.records) drift = std::max(drift, std::abs(r.energy - E0));
  CHECK(drift <= 1e-8 * std::abs(E0));
}

TEST_CASE("spring networks keep momenta in free flight") {
  SpringDemoOptions opt;
  opt.pulse = {};
  auto demo = make_spring_demo(opt);
  State s0 = demo.initial;
  for (std::size_t k = 0; k < s0.s.size(); ++k) s0.s[k] = 0.3 * std::sin(0.7 * static_cast<double>(k) + 0.2);
  for (std::size_t k = 0; k < s0.q.size(); ++k) s0.q[k] += 0.05 * std::cos(1.3 * static_cast<double>(k));
  const MomentaSample m0 = momenta(demo.network, s0);
  const double scale = std::max(1.0, max_abs(m0.j));

  for (auto v : {SchemeVariant::Midpoint, SchemeVariant::Average, SchemeVariant::NewConservative,
                 SchemeVariant::GEquivariant}) {
    const Trajectory t = integrate(demo.network, scheme_of(v), demo.solver, s0, 1.0);
    const MomentaSample m1 = momenta(demo.network, t.records.back().state);
    CHECK_MESSAGE(max_abs(minus(m1.l, m0.l)) <= 1e-10 * std::max(1.0, max_abs(m0.l)), to_string(v));
  }
  // The Gonzalez correction points along Δq, which carries the drift of the
  // centre of mass.
  const Trajectory tg = integrate(demo.network, scheme_of(SchemeVariant::Gonzalez), demo.solver, s0, 1.0);
  CHECK(max_abs(minus(momenta(demo.network, tg.records.back().state).l, m0.l)) > 1e-10);

  DissipationConfig diss;
  diss.chi_f = 0.05;
  diss.chi_s = 0.05;
  for (const auto& d : {DissipationConfig{}, diss}) {
    const Trajectory t = integrate(demo.network, scheme_of(SchemeVariant::GEquivariant, d), demo.solver, s0, 1.0);
    const MomentaSample m1 = momenta(demo.network, t.records.back().state);
    CHECK(max_abs(minus(m1.j, m0.j)) <= 1e-10 * scale);
    if (d.chi_f > 0.0) CHECK(t.records.back().energy < t.records.front().energy);
  }
}
