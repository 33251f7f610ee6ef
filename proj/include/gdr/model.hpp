#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdr/linalg.hpp"

namespace gdr {

/// Generalized coordinates and velocities at one instant.
struct State {
  Vec q;
  Vec s;
  double t = 0.0;
};

/// V(y) − V(x) together with the magnitude its rounding error scales with.
struct PotentialIncrement {
  double value = 0.0;
  double magnitude = 0.0;
};

/// Invariants Π(q) of a symmetry action together with the reduced potential
/// Ṽ, so that V = Ṽ ∘ Π. Every invariant must be at most quadratic in q for
/// the equivariant discrete derivative to be exact.
class InvariantStructure {
 public:
  virtual ~InvariantStructure() = default;

  virtual std::size_t invariant_count() const = 0;
  virtual Vec invariants(const Vec& q) const = 0;
  virtual Mat invariant_jacobian(const Vec& q) const = 0;
  /// DΠ(q)ᵀ w. The default forms the dense Jacobian.
  virtual Vec jacobian_transpose_times(const Vec& q, const Vec& w) const;
  virtual double reduced_potential(const Vec& pi) const = 0;
  virtual Vec reduced_grad(const Vec& pi) const = 0;
  /// Ṽ(π_y) − Ṽ(π_x). The default subtracts two reduced_potential values.
  virtual PotentialIncrement reduced_increment(const Vec& pi_x, const Vec& pi_y) const;
};

/// A conservative mechanical system with constant SPD mass matrix.
///
/// grad_potential returns +∇V. Discrete forces built from it satisfy
/// ⟨f, y − x⟩ = V(y) − V(x) and enter the momentum residual with a plus sign.
/// Implementations must be stateless after construction.
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual std::size_t dim() const = 0;
  virtual const SymMat& mass() const = 0;
  virtual double potential(const Vec& q) const = 0;
  virtual Vec grad_potential(const Vec& q) const = 0;
  /// V(y) − V(x). The default subtracts two potential values, which loses
  /// all relative accuracy when y is close to x; overrides should evaluate a
  /// factored difference.
  virtual PotentialIncrement potential_increment(const Vec& x, const Vec& y) const;

  /// Applied load; zero unless overridden.
  virtual Vec external_force(const Vec& q, double t) const;
  virtual bool has_external_force() const { return false; }

  virtual const InvariantStructure* symmetry() const { return nullptr; }

  /// Q = ℝ^{3n} with particle-wise stacked coordinates, so that rigid
  /// translation/rotation generators and momenta are defined.
  virtual bool ambient_particles() const { return false; }

  virtual std::optional<SymMat> analytic_hessian(const Vec&) const { return std::nullopt; }

  double kinetic_energy(const Vec& s) const { return 0.5 * weighted_norm_sq(s, mass()); }
};

/// τ_a(q): stack of a for every particle.
Vec translation_generator(const Vec3& a, const Vec& q);
/// ρ_θ(q): stack of θ × q_i for every particle.
Vec rotation_generator(const Vec3& theta, const Vec& q);

/// f_ext(t) = f(t)·f₀ with f a piecewise-linear scalar through the
/// breakpoints, zero outside of them.
class LoadSchedule {
 public:
  LoadSchedule() = default;
  LoadSchedule(Vec base_force, std::vector<std::pair<double, double>> breakpoints);

  double scale(double t) const;
  Vec eval(double t) const;

  const Vec& base_force() const { return base_; }
  const std::vector<std::pair<double, double>>& breakpoints() const { return breakpoints_; }
  /// Time after which the load is identically zero.
  double end_time() const;
  bool empty() const { return breakpoints_.empty(); }

 private:
  Vec base_;
  std::vector<std::pair<double, double>> breakpoints_;
};

Vec eval_load(const LoadSchedule& schedule, double t);

struct ValidationOptions {
  std::size_t samples = 10;
  /// Sampling box half-width around center.
  double radius = 1.0;
  /// Empty means the origin.
  Vec center;
  std::uint64_t seed = 20200611;
};

/// Checks the SystemModel contract at random points: SPD mass, gradient
/// against central differences, and V = Ṽ∘Π with DΠᵀ∇Ṽ = ∇V when symmetry
/// data is present. Returns the list of violations; empty means valid.
std::vector<std::string> validate_system(const SystemModel& sys, const ValidationOptions& options = {});

}  // namespace gdr
