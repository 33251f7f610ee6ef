#pragma once

// Two-point algorithmic forces and velocities.
//
// The force formulas correct the endpoint average g_a = (g(x) + g(y))/2 along
// the gradient jump Δg = g(y) − g(x):
//
//   f(x, y) = g_a + [(C(x, y) + D_f(x, y)) / ⟨Δg, Δq⟩] Δg,
//   C(x, y) = V(y) − V(x) − ⟨g_a, Δq⟩,
//
// which gives ⟨f, Δq⟩ = ΔV + D_f exactly. The scalar multiplying Δg is the
// metric-free solution of the minimum-norm correction program; the matching
// Lagrange multipliers depend on the metric and are available only as a
// diagnostic. The equivariant variant applies the same construction in the
// space of quadratic invariants and maps it back with DΠ at the midpoint.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "gdr/linalg.hpp"
#include "gdr/model.hpp"

namespace gdr {

enum class SchemeVariant { Average, Midpoint, NewConservative, Gonzalez, GEquivariant };

std::string_view to_string(SchemeVariant v);
std::optional<SchemeVariant> parse_scheme_variant(std::string_view name);

class DegenerateDenominator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingSymmetryData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Controllable numerical dissipation.
///
///   D_f(x, y) = (chi_f / 2h) ‖y − x‖²_D
///   D_s(u, v) = (chi_s / h) (√T(v) − √T(u))²
///
/// For the equivariant scheme D acts on invariant increments ΔΠ instead of
/// Δq. An empty D stands for the identity of whichever space applies.
struct DissipationConfig {
  double chi_f = 0.0;
  double chi_s = 0.0;
  SymMat D;
  double h = 1.0;

  /// Throws std::invalid_argument on negative chi, non-positive h or an
  /// indefinite D.
  void validate() const;
};

enum class DegeneracyMode { Fallback, Strict };

/// Treatment of |⟨Δg, Δq⟩| ≤ rel_threshold·(‖Δg‖‖Δq‖ + ε_mach): Fallback drops
/// the correction, Strict throws DegenerateDenominator.
struct DegeneracyPolicy {
  double rel_threshold = 1e-10;
  DegeneracyMode mode = DegeneracyMode::Fallback;
};

struct ForceScheme {
  SchemeVariant variant = SchemeVariant::NewConservative;
  DissipationConfig dissipation;
  DegeneracyPolicy policy;

  /// Checks the scheme against a system: the equivariant variant needs
  /// symmetry data, and force-level dissipation is only defined for the
  /// directional corrected-average variants.
  void validate(const SystemModel& sys) const;
};

// ---------------------------------------------------------------------------
// Scalar building blocks

double conservation_fn(const SystemModel& sys, const Vec& x, const Vec& y);
double dissipation_fn_f(const DissipationConfig& cfg, const Vec& x, const Vec& y);
double dissipation_fn_s(const DissipationConfig& cfg, const SymMat& M, const Vec& u, const Vec& v);

struct AlphaCoefficients {
  double alpha_cons = 0.0;
  double alpha_diss = 0.0;
  bool degenerate = false;
};

/// Convex-combination weights of f = ½(1−α)g(x) + ½(1+α)g(y):
/// α_cons = 2C/⟨Δg, Δq⟩, α_diss = 2D_f/⟨Δg, Δq⟩.
AlphaCoefficients alpha_coefficients(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x,
                                     const Vec& y, const DegeneracyPolicy& policy = {});

// ---------------------------------------------------------------------------
// Algorithmic forces

Vec conservative_force(const SystemModel& sys, const Vec& x, const Vec& y, const DegeneracyPolicy& policy = {});
Vec combined_force(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x, const Vec& y,
                   const DegeneracyPolicy& policy = {});

/// g((x+y)/2) + [Ĉ / ‖Δq‖²_{G⁻¹}] G⁻¹Δq with Ĉ = ΔV − ⟨g_m, Δq⟩. With G = I
/// this is Gonzalez's midpoint-corrected discrete gradient.
Vec gonzalez_force(const SystemModel& sys, const Vec& x, const Vec& y, const SymMat& metric,
                   const DegeneracyPolicy& policy = {});

/// DΠ(z)ᵀ [r_a + α Δr], z = (x+y)/2, r = ∇Ṽ at Π(x), Π(y), with α built from
/// the invariant-space conservation and dissipation functions.
Vec g_equivariant_force(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x, const Vec& y,
                        const DegeneracyPolicy& policy = {});

Vec midpoint_force(const SystemModel& sys, const Vec& x, const Vec& y);
Vec average_force(const SystemModel& sys, const Vec& x, const Vec& y);

/// Closed form of the scalar discrete derivative, (V(y) − V(x))/(y − x).
/// For y == x it returns dV(x) when given, else a central difference.
double one_d_discrete_derivative(const std::function<double(double)>& V, double x, double y,
                                 const std::function<double(double)>& dV = {});

// ---------------------------------------------------------------------------
// Algorithmic velocity

struct VelocityEvaluation {
  Vec s;
  double beta = 0.0;
  double diss_s = 0.0;
};

/// (1 + β)(u + v)/2 with β = D_s/(T(v) − T(u)) evaluated in the cancelled
/// form (chi_s/h)(√T(v) − √T(u))/(√T(v) + √T(u)).
VelocityEvaluation velocity_evaluation(const SymMat& M, const DissipationConfig& cfg, const Vec& u, const Vec& v);
Vec algorithmic_velocity(const SymMat& M, const DissipationConfig& cfg, const Vec& u, const Vec& v);

/// Same construction for an arbitrary velocity dissipation function; β falls
/// back to 0 when |T(v) − T(u)| ≤ 1e-12·max(1, T(u) + T(v)).
VelocityEvaluation velocity_evaluation_generic(const SymMat& M,
                                               const std::function<double(const Vec&, const Vec&)>& dissipation,
                                               const Vec& u, const Vec& v);

// ---------------------------------------------------------------------------
// Lagrange-multiplier diagnostics. These never feed the time step.

struct ForceMultipliers {
  double alpha_cons = 0.0;
  double lambda_cons = 0.0;
  double alpha_diss = 0.0;
  double lambda_diss = 0.0;
};

/// Solves the 2×2 stationarity systems of the conservative and dissipative
/// force programs for the given metric. Throws DegenerateDenominator when
/// ⟨Δg, Δq⟩ vanishes.
ForceMultipliers force_multipliers(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x,
                                   const Vec& y, const SymMat& metric);

struct VelocityMultipliers {
  double beta = 0.0;
  double mu = 0.0;
};

VelocityMultipliers velocity_multipliers(const SymMat& M, const DissipationConfig& cfg, const Vec& u, const Vec& v);

// ---------------------------------------------------------------------------
// Integrator-facing evaluation with cached endpoint data.

/// Quantities at one configuration, filled according to the scheme variant.
struct Endpoint {
  Vec q;
  Vec g;
  Vec pi;
  Vec r;
};

Endpoint make_endpoint(const SystemModel& sys, const Vec& q, SchemeVariant variant);

struct ForceEvaluation {
  Vec force;
  /// Force-level dissipation actually applied (0 after a fallback).
  double diss_f = 0.0;
  bool degenerate = false;
};

ForceEvaluation discrete_force(const SystemModel& sys, const ForceScheme& scheme, const Endpoint& x,
                               const Endpoint& y);

}  // namespace gdr
