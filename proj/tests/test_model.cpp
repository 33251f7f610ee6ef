#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gdr/model.hpp"
#include "gdr/systems.hpp"

using namespace gdr;

namespace {

// V = ½qᵀKq with a flip switch on the gradient sign.
class Quadratic final : public SystemModel {
 public:
  Quadratic(SymMat K, bool flip) : M_(SymMat::identity(K.dim())), K_(std::move(K)), flip_(flip) {}
  std::size_t dim() const override { return K_.dim(); }
  const SymMat& mass() const override { return M_; }
  double potential(const Vec& q) const override { return 0.5 * weighted_norm_sq(q, K_); }
  Vec grad_potential(const Vec& q) const override { return flip_ ? -(K_ * q) : K_ * q; }

 private:
  SymMat M_, K_;
  bool flip_;
};

bool mentions(const std::vector<std::string>& v, const std::string& word) {
  for (const auto& s : v)
    if (s.find(word) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("load schedule is piecewise linear in time") {
  const LoadSchedule load(Vec{1.0, -2.0}, {{0.0, 0.0}, {0.5, 5.0}, {1.0, 0.0}});
  const Vec f = load.eval(0.25);
  CHECK(f[0] == doctest::Approx(2.5));
  CHECK(f[1] == doctest::Approx(-5.0));
  CHECK(load.eval(2.0) == Vec{0.0, 0.0});
  CHECK(load.eval(0.0) == Vec{0.0, 0.0});
  CHECK(load.eval(-1.0) == Vec{0.0, 0.0});
  CHECK(load.scale(0.75) == doctest::Approx(2.5));
  CHECK(load.end_time() == 1.0);
  CHECK(eval_load(LoadSchedule{}, 0.3).empty());
}

TEST_CASE("load schedule rejects unsorted breakpoints") {
  CHECK_THROWS_AS(LoadSchedule(Vec{1.0}, {{0.5, 1.0}, {0.1, 0.0}}), std::invalid_argument);
}

TEST_CASE("validator accepts the polynomial two-mass system") {
  const auto ex = make_example1();
  CHECK(validate_system(ex.system).empty());
}

TEST_CASE("validator flags a wrong gradient sign") {
  const Quadratic bad(SymMat{{2.0, 0.5}, {0.5, 1.0}}, true);
  const auto issues = validate_system(bad);
  REQUIRE_FALSE(issues.empty());
  CHECK(mentions(issues, "gradient"));
}

TEST_CASE("validator skips symmetry checks without symmetry data") {
  const Quadratic ok(SymMat{{2.0, 0.5}, {0.5, 1.0}}, false);
  CHECK(ok.symmetry() == nullptr);
  CHECK(validate_system(ok).empty());
}

TEST_CASE("default increment subtracts potentials") {
  const Quadratic ok(SymMat{{2.0, 0.0}, {0.0, 1.0}}, false);
  const PotentialIncrement d = ok.potential_increment(Vec{1.0, 0.0}, Vec{0.0, 2.0});
  CHECK(d.value == doctest::Approx(1.0));
  CHECK(d.magnitude == doctest::Approx(3.0));
}

TEST_CASE("rigid generators") {
  const Vec q{1.0, 0.0, 0.0, 0.0, 2.0, 0.0};
  CHECK(translation_generator({1.0, 2.0, 3.0}, q) == Vec{1.0, 2.0, 3.0, 1.0, 2.0, 3.0});
  const Vec r = rotation_generator({0.0, 0.0, 1.0}, q);
  const Vec expected{0.0, 1.0, 0.0, -2.0, 0.0, 0.0};
  CHECK(norm(r - expected) < 1e-15);
}

TEST_CASE("spring gradients are orthogonal to rigid motions") {
  const auto demo = make_spring_demo();
  Vec q = demo.initial.q;
  for (std::size_t k = 0; k < q.size(); ++k) q[k] += 0.05 * std::sin(1.0 + 3.0 * static_cast<double>(k));
  const Vec g = demo.network.grad_potential(q);
  const double scale = norm(g) * norm(q);
  for (const Vec3 a : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}) {
    CHECK(std::abs(dot(g, translation_generator(a, q))) <= 1e-12 * scale);
    CHECK(std::abs(dot(g, rotation_generator(a, q))) <= 1e-12 * scale);
  }
}
