#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gdr/systems.hpp"

using namespace gdr;

namespace {

Vec random_vec(std::mt19937_64& rng, std::size_t n, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Rotation by angle a about the unit axis w (Rodrigues).
Vec rotate(const Vec& q, const Vec3& w, double a) {
  Vec out(q.size());
  const double c = std::cos(a), s = std::sin(a);
  for (std::size_t p = 0; p < q.size() / 3; ++p) {
    const Vec3 v{q[3 * p], q[3 * p + 1], q[3 * p + 2]};
    const Vec3 wxv = cross(w, v);
    const double wv = w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
    for (std::size_t k = 0; k < 3; ++k) out[3 * p + k] = v[k] * c + wxv[k] * s + w[k] * wv * (1.0 - c);
  }
  return out;
}

}  // namespace

TEST_CASE("example 1 potential at the initial state") {
  const auto ex = make_example1();
  const double a = 1.0, b = 0.918;
  const double oracle = 0.5 * (16.0 * a * a + 16.0 * b * b - 30.0 * a * b) + 0.25 * 15.0 * std::pow(a, 4);
  CHECK(oracle == doctest::Approx(4.721792));
  CHECK(ex.system.potential(ex.initial.q) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(ex.system.grad_potential(Vec{0.0, 0.0}) == Vec{0.0, 0.0});
}

TEST_CASE("example parameters") {
  const auto ex1 = make_example1();
  CHECK(ex1.initial.q == Vec{1.0, 0.918});
  CHECK(ex1.initial.s == Vec{0.0, 0.0});
  CHECK(ex1.solver.dt == 1e-3);
  CHECK(ex1.solver.rel_tol == 1e-10);
  CHECK(ex1.duration == 50.0);
  CHECK(ex1.dissipation.chi_f == 0.0025);
  CHECK(ex1.dissipation.chi_s == 0.008);
  CHECK(ex1.dissipation.D == ex1.system.V2());

  const auto ex2 = make_example2();
  CHECK(ex2.initial.q == Vec{-0.41726, -0.49840});
  CHECK(ex2.initial.s == Vec{-2.53182, -2.79761});
  CHECK(ex2.solver.dt == 1e-4);
  CHECK(ex2.dissipation.chi_f == 0.001);
  CHECK(ex2.dissipation.chi_s == 0.001);
  CHECK(ex2.dissipation.D == ex2.system.V2());
}

TEST_CASE("example 2 on the diagonal") {
  const auto ex = make_example2();
  // Both V^N and V^D annihilate (c, c), leaving ½ V² = 10 c².
  for (double c : {-1.3, 0.0, 0.4, 2.0}) CHECK(ex.system.potential(Vec{c, c}) == doctest::Approx(10.0 * c * c));
}

TEST_CASE("example 2 without the non-polynomial term is a linear oscillator") {
  const SymMat M = SymMat::identity(2);
  const SymMat V2{{10.0, 0.0}, {0.0, 10.0}};
  const TwoMassNonPolynomial sys(M, V2, SymMat(Mat(2, 2)), SymMat{{5.0, -5.0}, {-5.0, 5.0}}, 3);
  const LinearOscillator osc(M, V2);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Vec q = random_vec(rng, 2, 2.0);
    CHECK(sys.potential(q) == doctest::Approx(osc.potential(q)));
    CHECK(norm(sys.grad_potential(q) - osc.grad_potential(q)) < 1e-12);
  }
}

TEST_CASE("catalog systems pass validation") {
  CHECK(validate_system(make_example1().system).empty());
  CHECK(validate_system(make_example2().system).empty());
  CHECK(validate_system(LinearOscillator(SymMat{{2.0, 0.0}, {0.0, 1.0}}, SymMat{{3.0, -1.0}, {-1.0, 2.0}})).empty());
  for (auto topo : {SpringTopology::Pair, SpringTopology::Cube, SpringTopology::Chain, SpringTopology::Random}) {
    SpringDemoOptions opt;
    opt.topology = topo;
    const auto demo = make_spring_demo(opt);
    ValidationOptions v;
    v.center = demo.initial.q;
    v.radius = 0.1;
    CHECK_MESSAGE(validate_system(demo.network, v).empty(), to_string(topo));
  }
}

TEST_CASE("analytic hessian matches differences of the gradient") {
  const auto ex = make_example1();
  const Vec q{0.7, -0.3};
  const SymMat H = *ex.system.analytic_hessian(q);
  const double e = 1e-6;
  for (std::size_t j = 0; j < 2; ++j) {
    Vec qp = q, qm = q;
    qp[j] += e;
    qm[j] -= e;
    const Vec col = (1.0 / (2.0 * e)) * (ex.system.grad_potential(qp) - ex.system.grad_potential(qm));
    for (std::size_t i = 0; i < 2; ++i) CHECK(H(i, j) == doctest::Approx(col[i]).epsilon(1e-7));
  }
}

TEST_CASE("potential increments agree with direct differences") {
  std::mt19937_64 rng(5);
  const auto ex1 = make_example1();
  const auto ex2 = make_example2();
  const LinearOscillator osc(SymMat::identity(2), SymMat{{3.0, 1.0}, {1.0, 2.0}});
  const auto demo = make_spring_demo();
  const SystemModel* systems[] = {&ex1.system, &ex2.system, &osc, &demo.network};
  for (const SystemModel* sys : systems) {
    for (int k = 0; k < 100; ++k) {
      Vec x = random_vec(rng, sys->dim(), 0.3), y = random_vec(rng, sys->dim(), 0.3);
      if (sys == &demo.network) {
        x += demo.initial.q;
        y += demo.initial.q;
      }
      const PotentialIncrement d = sys->potential_increment(x, y);
      const double direct = sys->potential(y) - sys->potential(x);
      const double scale = std::abs(sys->potential(x)) + std::abs(sys->potential(y));
      CHECK(std::abs(d.value - direct) <= 1e-13 * std::max(1.0, scale));
      CHECK(d.magnitude >= 0.0);
    }
  }
}

TEST_CASE("increments stay accurate for nearby points") {
  const auto ex = make_example1();
  const Vec x{0.8, 0.5};
  const Vec y = x + Vec{1e-7, -2e-7};
  // y − x is exact here. Taylor oracle to second order; the cubic term is
  // below 1e-20.
  const Vec d = y - x;
  const Vec g = ex.system.grad_potential(x);
  const SymMat H = *ex.system.analytic_hessian(x);
  const double oracle = dot(g, d) + 0.5 * weighted_norm_sq(d, H);
  const double inc = ex.system.potential_increment(x, y).value;
  CHECK(std::abs(inc - oracle) <= 1e-12 * std::abs(oracle));
}

TEST_CASE("linear oscillator exact solution") {
  const LinearOscillator osc(SymMat::identity(1), SymMat::identity(1));
  const State s0{Vec{1.0}, Vec{0.0}, 0.0};
  for (double t : {0.0, 0.5, 3.0}) {
    const State s = osc.exact(s0, t);
    CHECK(s.q[0] == doctest::Approx(std::cos(t)));
    CHECK(s.s[0] == doctest::Approx(-std::sin(t)));
  }
  const LinearOscillator osc2(SymMat{{2.0, 0.0}, {0.0, 1.0}}, SymMat{{3.0, -1.0}, {-1.0, 2.0}});
  const State a{Vec{0.3, -0.2}, Vec{1.0, 0.5}, 0.0};
  const double E0 = osc2.kinetic_energy(a.s) + osc2.potential(a.q);
  const State b = osc2.exact(a, 7.3);
  CHECK(osc2.kinetic_energy(b.s) + osc2.potential(b.q) == doctest::Approx(E0).epsilon(1e-13));
  CHECK_THROWS_AS(LinearOscillator(SymMat::identity(1), SymMat{{-1.0}}), NotSPD);
}

TEST_CASE("coefficient tensors symmetrize") {
  CoefficientTensor T = CoefficientTensor::zeros(2, 3);
  T.at({0, 0, 1}) = 3.0;
  T.symmetrize();
  CHECK(T.at({0, 1, 0}) == doctest::Approx(1.0));
  CHECK(T.at({1, 0, 0}) == doctest::Approx(1.0));
  CHECK(T.at({0, 0, 1}) == doctest::Approx(1.0));

  // V = ⅓·3·q₀²q₁ split over index orderings gives V = q₀²q₁.
  const TwoMassPolynomial sys(SymMat::identity(2), SymMat(Mat(2, 2)), T);
  CHECK(sys.potential(Vec{2.0, 3.0}) == doctest::Approx(12.0));
  CHECK(validate_system(sys).empty());
}

TEST_CASE("spring pair at rest length is in equilibrium") {
  SpringDemoOptions opt;
  opt.topology = SpringTopology::Pair;
  const auto demo = make_spring_demo(opt);
  CHECK(norm(demo.network.grad_potential(demo.initial.q)) == 0.0);
  CHECK(demo.network.potential(demo.initial.q) == 0.0);
}

TEST_CASE("spring potential is invariant under rigid motions") {
  const auto demo = make_spring_demo();
  std::mt19937_64 rng(9);
  const Vec q = demo.initial.q + random_vec(rng, demo.network.dim(), 0.2);
  const double V = demo.network.potential(q);
  CHECK(demo.network.potential(q + translation_generator({0.3, -2.0, 5.0}, q)) == doctest::Approx(V).epsilon(1e-13));
  const double r = 1.0 / std::sqrt(3.0);
  CHECK(std::abs(demo.network.potential(rotate(q, {r, r, r}, 0.7)) - V) <= 1e-12 * std::max(1.0, V));
}

TEST_CASE("spring network errors") {
  CHECK_THROWS_AS(SpringNetwork3D({1.0, 1.0}, {Spring{0, 2}}), BadTopology);
  CHECK_THROWS_AS(SpringNetwork3D({1.0, 1.0}, {Spring{1, 1}}), BadTopology);
  CHECK_THROWS_AS(SpringNetwork3D({}, {}), BadTopology);
  CHECK_THROWS_AS(SpringNetwork3D({1.0, -1.0}, {Spring{0, 1}}), std::invalid_argument);
  SpringDemoOptions opt;
  opt.topology = SpringTopology::Chain;
  opt.n_particles = 1;
  CHECK_THROWS_AS(make_spring_demo(opt), BadTopology);

  const SpringNetwork3D net({1.0, 1.0}, {Spring{0, 1, 1.0, 1.0}});
  CHECK_THROWS_AS(net.reduced_grad(Vec{0.0}), SpringCollapse);
  CHECK_THROWS_AS(net.grad_potential(Vec(6)), SpringCollapse);
  const SpringNetwork3D slack({1.0, 1.0}, {Spring{0, 1, 1.0, 0.0}});
  CHECK_NOTHROW(slack.grad_potential(Vec(6)));
}

TEST_CASE("topology names round trip") {
  for (auto t : {SpringTopology::Pair, SpringTopology::Cube, SpringTopology::Chain, SpringTopology::Random})
    CHECK(parse_spring_topology(to_string(t)) == t);
  CHECK_FALSE(parse_spring_topology("torus").has_value());
}

TEST_CASE("cube demo wiring") {
  const auto demo = make_spring_demo();
  CHECK(demo.network.particle_count() == 8);
  CHECK(demo.network.springs().size() == 24);
  CHECK(demo.network.has_external_force());
  CHECK(demo.duration >= demo.network.load().end_time() + 4.0);
  // The load has a nonzero resultant and torque.
  const Vec f = demo.network.load().base_force();
  Vec3 sum{}, torque{};
  for (std::size_t p = 0; p < 8; ++p) {
    const Vec3 fp{f[3 * p], f[3 * p + 1], f[3 * p + 2]};
    const Vec3 qp{demo.initial.q[3 * p], demo.initial.q[3 * p + 1], demo.initial.q[3 * p + 2]};
    const Vec3 tp = cross(qp, fp);
    for (std::size_t c = 0; c < 3; ++c) {
      sum[c] += fp[c];
      torque[c] += tp[c];
    }
  }
  CHECK(std::abs(sum[0]) + std::abs(sum[1]) + std::abs(sum[2]) > 0.0);
  CHECK(std::abs(torque[0]) + std::abs(torque[1]) + std::abs(torque[2]) > 0.0);
}

TEST_CASE("parallel spring kernels reproduce the serial ones bitwise") {
  for (auto topo : {SpringTopology::Random, SpringTopology::Chain}) {
    SpringDemoOptions opt;
    opt.topology = topo;
    opt.n_particles = topo == SpringTopology::Random ? 60 : 1500;
    opt.mode = KernelMode::Serial;
    auto demo = make_spring_demo(opt);
    REQUIRE(demo.network.springs().size() >= 512);
    std::mt19937_64 rng(13);
    const Vec q = demo.initial.q + random_vec(rng, demo.network.dim(), 0.05);
    const Vec w = random_vec(rng, demo.network.invariant_count(), 1.0);

    const Vec g_serial = demo.network.grad_potential(q);
    const Vec pi_serial = demo.network.invariants(q);
    const Vec jt_serial = demo.network.jacobian_transpose_times(q, w);
    const double v_serial = demo.network.potential(q);
    demo.network.set_kernel_mode(KernelMode::Parallel);
    CHECK(demo.network.grad_potential(q) == g_serial);
    CHECK(demo.network.invariants(q) == pi_serial);
    CHECK(demo.network.jacobian_transpose_times(q, w) == jt_serial);
    CHECK(demo.network.potential(q) == v_serial);
  }
}

TEST_CASE("invariant jacobian matches the transpose product") {
  const auto demo = make_spring_demo();
  std::mt19937_64 rng(21);
  const Vec q = demo.initial.q + random_vec(rng, demo.network.dim(), 0.1);
  const Vec w = random_vec(rng, demo.network.invariant_count(), 1.0);
  const Vec dense = transpose_times(demo.network.invariant_jacobian(q), w);
  CHECK(norm(dense - demo.network.jacobian_transpose_times(q, w)) <= 1e-13 * norm(dense));
  const Vec chain = demo.network.jacobian_transpose_times(q, demo.network.reduced_grad(demo.network.invariants(q)));
  const Vec g = demo.network.grad_potential(q);
  CHECK(norm(chain - g) <= 1e-12 * std::max(1.0, norm(g)));
}
