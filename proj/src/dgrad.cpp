#include "gdr/dgrad.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace gdr {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Below this many ulps of the participating magnitudes, C is pure rounding
// and dividing it by an O(‖Δq‖²) denominator would inject noise.
constexpr double kNoiseUlps = 32.0;

double abs_dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] * b[i]);
  return acc;
}

/// Coefficient of Δg in g_a + coeff·Δg, shared by the Euclidean and the
/// invariant-space constructions.
struct Correction {
  double conservation = 0.0;
  double coefficient = 0.0;
  double diss = 0.0;
  double denominator = 0.0;
  bool degenerate = false;
  /// False when the denominator fell below the degeneracy threshold.
  bool resolved = false;
};

Correction corrected_average(const PotentialIncrement& dV, const Vec& gx, const Vec& gy, const Vec& dq, double diss,
                             const DegeneracyPolicy& policy) {
  const Vec dg = gy - gx;
  const double den = dot(dg, dq);
  const double ga_dq = 0.5 * (dot(gx, dq) + dot(gy, dq));
  double c = dV.value - ga_dq;
  const double noise = kNoiseUlps * kEps * (dV.magnitude + 0.5 * (abs_dot(gx, dq) + abs_dot(gy, dq)));
  if (std::abs(c) <= noise) c = 0.0;

  Correction out;
  out.conservation = c;
  const double threshold = policy.rel_threshold * (norm(dg) * norm(dq) + kEps);
  if (std::abs(den) <= threshold) {
    if (c == 0.0 && diss == 0.0) return out;
    if (policy.mode == DegeneracyMode::Strict) {
      throw DegenerateDenominator("corrected average: <dg, dq> below degeneracy threshold");
    }
    out.degenerate = true;
    return out;
  }
  out.coefficient = (c + diss) / den;
  out.diss = diss;
  out.denominator = den;
  out.resolved = true;
  return out;
}

Vec midpoint_of(const Vec& x, const Vec& y) { return 0.5 * (x + y); }

Vec average_of(const Vec& a, const Vec& b) { return 0.5 * (a + b); }

double invariant_dissipation(const DissipationConfig& cfg, const Vec& dpi) {
  if (cfg.chi_f == 0.0) return 0.0;
  const double nrm = cfg.D.empty() ? dot(dpi, dpi) : weighted_norm_sq(dpi, cfg.D);
  return cfg.chi_f / (2.0 * cfg.h) * nrm;
}

const InvariantStructure& require_symmetry(const SystemModel& sys) {
  const InvariantStructure* sym = sys.symmetry();
  if (sym == nullptr) throw MissingSymmetryData("equivariant force requires invariants and a reduced potential");
  return *sym;
}

ForceEvaluation equivariant_eval(const SystemModel& sys, const DissipationConfig& cfg, const Endpoint& x,
                                 const Endpoint& y, const DegeneracyPolicy& policy) {
  const InvariantStructure& sym = require_symmetry(sys);
  const Vec dpi = y.pi - x.pi;
  const Correction corr = corrected_average(sym.reduced_increment(x.pi, y.pi), x.r, y.r, dpi,
                                            invariant_dissipation(cfg, dpi), policy);
  Vec reduced = average_of(x.r, y.r);
  if (corr.coefficient != 0.0) axpy(corr.coefficient, y.r - x.r, reduced);
  ForceEvaluation out;
  out.force = sym.jacobian_transpose_times(midpoint_of(x.q, y.q), reduced);
  out.diss_f = corr.diss;
  out.degenerate = corr.degenerate;
  return out;
}

ForceEvaluation corrected_eval(const SystemModel& sys, const DissipationConfig& cfg, const Endpoint& x,
                               const Endpoint& y, const DegeneracyPolicy& policy) {
  const Vec dq = y.q - x.q;
  const Correction corr = corrected_average(sys.potential_increment(x.q, y.q), x.g, y.g, dq,
                                            dissipation_fn_f(cfg, x.q, y.q), policy);
  ForceEvaluation out;
  out.force = average_of(x.g, y.g);
  if (corr.coefficient != 0.0) axpy(corr.coefficient, y.g - x.g, out.force);
  out.diss_f = corr.diss;
  out.degenerate = corr.degenerate;
  return out;
}

ForceEvaluation gonzalez_eval(const SystemModel& sys, const Endpoint& x, const Endpoint& y, const SymMat* metric,
                              const DegeneracyPolicy& policy) {
  const Vec dq = y.q - x.q;
  ForceEvaluation out;
  out.force = sys.grad_potential(midpoint_of(x.q, y.q));
  const double scale = std::max({1.0, norm(x.q), norm(y.q)});
  const PotentialIncrement dV = sys.potential_increment(x.q, y.q);
  double c = dV.value - dot(out.force, dq);
  const double noise = kNoiseUlps * kEps * (dV.magnitude + abs_dot(out.force, dq));
  if (std::abs(c) <= noise) c = 0.0;
  if (c == 0.0) return out;
  if (norm(dq) <= policy.rel_threshold * scale) {
    if (policy.mode == DegeneracyMode::Strict) throw DegenerateDenominator("gonzalez: |dq| below threshold");
    out.degenerate = true;
    return out;
  }
  const Vec w = metric == nullptr ? dq : solve_spd(*metric, dq);
  axpy(c / dot(dq, w), w, out.force);
  return out;
}

}  // namespace

std::string_view to_string(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::Average: return "average";
    case SchemeVariant::Midpoint: return "midpoint";
    case SchemeVariant::NewConservative: return "new_conservative";
    case SchemeVariant::Gonzalez: return "gonzalez";
    case SchemeVariant::GEquivariant: return "g_equivariant";
  }
  return "unknown";
}

std::optional<SchemeVariant> parse_scheme_variant(std::string_view name) {
  for (auto v : {SchemeVariant::Average, SchemeVariant::Midpoint, SchemeVariant::NewConservative,
                 SchemeVariant::Gonzalez, SchemeVariant::GEquivariant}) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

void DissipationConfig::validate() const {
  if (!(chi_f >= 0.0) || !std::isfinite(chi_f)) throw std::invalid_argument("chi_f must be a finite value >= 0");
  if (!(chi_s >= 0.0) || !std::isfinite(chi_s)) throw std::invalid_argument("chi_s must be a finite value >= 0");
  if (!(h > 0.0)) throw std::invalid_argument("dissipation time step h must be > 0");
  if (!D.empty()) {
    // PSD check: D + δI must factor for a tiny relative shift δ.
    double trace = 0.0;
    for (std::size_t i = 0; i < D.dim(); ++i) trace += std::abs(D(i, i));
    const double shift = 1e-12 * std::max(trace, 1.0);
    if (!(D + shift * SymMat::identity(D.dim())).is_spd()) {
      throw std::invalid_argument("dissipation matrix D must be positive semi-definite");
    }
  }
}

void ForceScheme::validate(const SystemModel& sys) const {
  dissipation.validate();
  if (policy.rel_threshold <= 0.0) throw std::invalid_argument("degeneracy threshold must be > 0");
  const bool corrected = variant == SchemeVariant::NewConservative || variant == SchemeVariant::GEquivariant;
  if (dissipation.chi_f > 0.0 && !corrected) {
    throw std::invalid_argument(std::string("force dissipation is not defined for scheme ") +
                                std::string(to_string(variant)));
  }
  if (variant == SchemeVariant::GEquivariant) {
    const InvariantStructure& sym = require_symmetry(sys);
    if (!dissipation.D.empty() && dissipation.D.dim() != sym.invariant_count()) {
      throw DimensionMismatch("equivariant dissipation matrix must match the invariant count");
    }
  } else if (!dissipation.D.empty() && dissipation.D.dim() != sys.dim()) {
    throw DimensionMismatch("dissipation matrix must match the system dimension");
  }
}

double conservation_fn(const SystemModel& sys, const Vec& x, const Vec& y) {
  const Vec ga = average_of(sys.grad_potential(x), sys.grad_potential(y));
  return sys.potential_increment(x, y).value - dot(ga, y - x);
}

double dissipation_fn_f(const DissipationConfig& cfg, const Vec& x, const Vec& y) {
  if (cfg.chi_f == 0.0) return 0.0;
  const Vec dq = y - x;
  const double nrm = cfg.D.empty() ? dot(dq, dq) : weighted_norm_sq(dq, cfg.D);
  return cfg.chi_f / (2.0 * cfg.h) * nrm;
}

double dissipation_fn_s(const DissipationConfig& cfg, const SymMat& M, const Vec& u, const Vec& v) {
  if (cfg.chi_s == 0.0) return 0.0;
  const double d = std::sqrt(0.5 * weighted_norm_sq(v, M)) - std::sqrt(0.5 * weighted_norm_sq(u, M));
  return cfg.chi_s / cfg.h * d * d;
}

AlphaCoefficients alpha_coefficients(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x,
                                     const Vec& y, const DegeneracyPolicy& policy) {
  const Vec gx = sys.grad_potential(x);
  const Vec gy = sys.grad_potential(y);
  const Vec dq = y - x;
  const double diss = dissipation_fn_f(cfg, x, y);
  const Correction corr = corrected_average(sys.potential_increment(x, y), gx, gy, dq, diss, policy);
  AlphaCoefficients out;
  out.degenerate = corr.degenerate;
  if (!corr.resolved) return out;
  out.alpha_cons = 2.0 * corr.conservation / corr.denominator;
  out.alpha_diss = 2.0 * corr.diss / corr.denominator;
  return out;
}

Vec conservative_force(const SystemModel& sys, const Vec& x, const Vec& y, const DegeneracyPolicy& policy) {
  DissipationConfig none;
  return combined_force(sys, none, x, y, policy);
}

Vec combined_force(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x, const Vec& y,
                   const DegeneracyPolicy& policy) {
  return corrected_eval(sys, cfg, make_endpoint(sys, x, SchemeVariant::NewConservative),
                        make_endpoint(sys, y, SchemeVariant::NewConservative), policy)
      .force;
}

Vec gonzalez_force(const SystemModel& sys, const Vec& x, const Vec& y, const SymMat& metric,
                   const DegeneracyPolicy& policy) {
  return gonzalez_eval(sys, make_endpoint(sys, x, SchemeVariant::Gonzalez),
                       make_endpoint(sys, y, SchemeVariant::Gonzalez), &metric, policy)
      .force;
}

Vec g_equivariant_force(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x, const Vec& y,
                        const DegeneracyPolicy& policy) {
  require_symmetry(sys);
  return equivariant_eval(sys, cfg, make_endpoint(sys, x, SchemeVariant::GEquivariant),
                          make_endpoint(sys, y, SchemeVariant::GEquivariant), policy)
      .force;
}

Vec midpoint_force(const SystemModel& sys, const Vec& x, const Vec& y) {
  return sys.grad_potential(midpoint_of(x, y));
}

Vec average_force(const SystemModel& sys, const Vec& x, const Vec& y) {
  return average_of(sys.grad_potential(x), sys.grad_potential(y));
}

double one_d_discrete_derivative(const std::function<double(double)>& V, double x, double y,
                                 const std::function<double(double)>& dV) {
  if (x != y) return (V(y) - V(x)) / (y - x);
  if (dV) return dV(x);
  const double eps = 1e-6 * std::max(1.0, std::abs(x));
  return (V(x + eps) - V(x - eps)) / (2.0 * eps);
}

VelocityEvaluation velocity_evaluation(const SymMat& M, const DissipationConfig& cfg, const Vec& u, const Vec& v) {
  VelocityEvaluation out;
  out.s = 0.5 * (u + v);
  if (cfg.chi_s == 0.0) return out;
  const double ru = std::sqrt(0.5 * weighted_norm_sq(u, M));
  const double rv = std::sqrt(0.5 * weighted_norm_sq(v, M));
  if (ru + rv == 0.0) return out;
  out.beta = cfg.chi_s / cfg.h * (rv - ru) / (rv + ru);
  out.diss_s = cfg.chi_s / cfg.h * (rv - ru) * (rv - ru);
  out.s *= 1.0 + out.beta;
  return out;
}

Vec algorithmic_velocity(const SymMat& M, const DissipationConfig& cfg, const Vec& u, const Vec& v) {
  return velocity_evaluation(M, cfg, u, v).s;
}

VelocityEvaluation velocity_evaluation_generic(const SymMat& M,
                                               const std::function<double(const Vec&, const Vec&)>& dissipation,
                                               const Vec& u, const Vec& v) {
  VelocityEvaluation out;
  out.s = 0.5 * (u + v);
  const double tu = 0.5 * weighted_norm_sq(u, M);
  const double tv = 0.5 * weighted_norm_sq(v, M);
  if (std::abs(tv - tu) <= 1e-12 * std::max(1.0, tu + tv)) return out;
  out.diss_s = dissipation(u, v);
  out.beta = out.diss_s / (tv - tu);
  out.s *= 1.0 + out.beta;
  return out;
}

ForceMultipliers force_multipliers(const SystemModel& sys, const DissipationConfig& cfg, const Vec& x,
                                   const Vec& y, const SymMat& metric) {
  const Vec gx = sys.grad_potential(x);
  const Vec gy = sys.grad_potential(y);
  const Vec dg = gy - gx;
  const Vec dq = y - x;
  const Vec ga = average_of(gx, gy);
  const Vec gm = sys.grad_potential(midpoint_of(x, y));
  const double a11 = 0.5 * weighted_norm_sq(dg, metric);
  const double a12 = dot(dg, dq);
  if (a12 == 0.0) throw DegenerateDenominator("force_multipliers: <dg, dq> = 0");
  const Mat A{{a11, a12}, {a12, 0.0}};
  const double c = sys.potential_increment(x, y).value - dot(ga, dq);
  const Vec cons = solve_general(A, Vec{dot(dg, metric * (gm - ga)), 2.0 * c});
  const Vec diss = solve_general(A, Vec{0.0, 2.0 * dissipation_fn_f(cfg, x, y)});
  return {cons[0], cons[1], diss[0], diss[1]};
}

VelocityMultipliers velocity_multipliers(const SymMat& M, const DissipationConfig& cfg, const Vec& u, const Vec& v) {
  const Vec w = 0.5 * (u + v);
  const double a11 = weighted_norm_sq(w, M);
  const double a12 = 0.5 * weighted_norm_sq(v, M) - 0.5 * weighted_norm_sq(u, M);
  if (a12 == 0.0) throw DegenerateDenominator("velocity_multipliers: T(v) = T(u)");
  const Vec sol = solve_general(Mat{{a11, a12}, {a12, 0.0}}, Vec{0.0, dissipation_fn_s(cfg, M, u, v)});
  return {sol[0], sol[1]};
}

Endpoint make_endpoint(const SystemModel& sys, const Vec& q, SchemeVariant variant) {
  Endpoint e;
  e.q = q;
  switch (variant) {
    case SchemeVariant::Midpoint:
      break;
    case SchemeVariant::Average:
      e.g = sys.grad_potential(q);
      break;
    case SchemeVariant::NewConservative:
      e.g = sys.grad_potential(q);
      break;
    case SchemeVariant::Gonzalez:
      break;
    case SchemeVariant::GEquivariant: {
      const InvariantStructure& sym = require_symmetry(sys);
      e.pi = sym.invariants(q);
      e.r = sym.reduced_grad(e.pi);
      break;
    }
  }
  return e;
}

ForceEvaluation discrete_force(const SystemModel& sys, const ForceScheme& scheme, const Endpoint& x,
                               const Endpoint& y) {
  switch (scheme.variant) {
    case SchemeVariant::Midpoint:
      return {sys.grad_potential(midpoint_of(x.q, y.q)), 0.0, false};
    case SchemeVariant::Average:
      return {average_of(x.g, y.g), 0.0, false};
    case SchemeVariant::NewConservative:
      return corrected_eval(sys, scheme.dissipation, x, y, scheme.policy);
    case SchemeVariant::Gonzalez:
      return gonzalez_eval(sys, x, y, nullptr, scheme.policy);
    case SchemeVariant::GEquivariant:
      return equivariant_eval(sys, scheme.dissipation, x, y, scheme.policy);
  }
  throw std::logic_error("discrete_force: unknown scheme variant");
}

}  // namespace gdr
