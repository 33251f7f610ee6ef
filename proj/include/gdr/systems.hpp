#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "gdr/dgrad.hpp"
#include "gdr/integrator.hpp"
#include "gdr/linalg.hpp"
#include "gdr/model.hpp"

namespace gdr {

class SpringCollapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadTopology : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense coefficient tensor of rank 3 or 4 over n coordinates, flat
/// row-major. Entries are symmetrized over index permutations on use.
struct CoefficientTensor {
  std::size_t n = 0;
  std::size_t rank = 0;
  std::vector<double> values;

  static CoefficientTensor zeros(std::size_t n, std::size_t rank);
  double& at(std::initializer_list<std::size_t> idx);
  void symmetrize();
};

/// V(q) = ½V²_ab qᵃqᵇ + ⅓V³_abc qᵃqᵇqᶜ + ¼V⁴_abcd qᵃqᵇqᶜqᵈ.
class TwoMassPolynomial final : public SystemModel {
 public:
  /// Empty tensors mean the term is absent.
  TwoMassPolynomial(SymMat M, SymMat V2, CoefficientTensor V3 = {}, CoefficientTensor V4 = {});

  std::size_t dim() const override { return M_.dim(); }
  const SymMat& mass() const override { return M_; }
  double potential(const Vec& q) const override;
  Vec grad_potential(const Vec& q) const override;
  PotentialIncrement potential_increment(const Vec& x, const Vec& y) const override;
  std::optional<SymMat> analytic_hessian(const Vec& q) const override;

  const SymMat& V2() const { return V2_; }

 private:
  SymMat M_;
  SymMat V2_;
  CoefficientTensor V3_;
  CoefficientTensor V4_;
};

/// V(q) = ½[V²_ab + Vᴺ_ab/(1 + Vᴰ_cd qᶜqᵈ)ⁿ] qᵃqᵇ.
class TwoMassNonPolynomial final : public SystemModel {
 public:
  TwoMassNonPolynomial(SymMat M, SymMat V2, SymMat VN, SymMat VD, int n_exp);

  std::size_t dim() const override { return M_.dim(); }
  const SymMat& mass() const override { return M_; }
  double potential(const Vec& q) const override;
  Vec grad_potential(const Vec& q) const override;
  PotentialIncrement potential_increment(const Vec& x, const Vec& y) const override;

  const SymMat& V2() const { return V2_; }

 private:
  SymMat M_;
  SymMat V2_;
  SymMat VN_;
  SymMat VD_;
  int n_;
};

class LinearOscillator final : public SystemModel {
 public:
  /// Throws NotSPD unless both M and K are SPD.
  LinearOscillator(SymMat M, SymMat K);

  std::size_t dim() const override { return M_.dim(); }
  const SymMat& mass() const override { return M_; }
  double potential(const Vec& q) const override;
  Vec grad_potential(const Vec& q) const override;
  PotentialIncrement potential_increment(const Vec& x, const Vec& y) const override;
  std::optional<SymMat> analytic_hessian(const Vec&) const override { return K_; }

  /// Exact flow from `initial` to time t via the modal decomposition.
  State exact(const State& initial, double t) const;

 private:
  SymMat M_;
  SymMat K_;
  // Modes of M⁻¹K: q = Φ y, Φᵀ M Φ = I, Φᵀ K Φ = diag(ω²).
  Mat phi_;
  Vec omega_;
};

struct Spring {
  std::size_t i = 0;
  std::size_t j = 0;
  double stiffness = 1.0;
  double rest_length = 0.0;
};

/// Serial kernels are the reference; Parallel uses OpenMP gather loops that
/// give results independent of the thread count.
enum class KernelMode { Serial, Parallel };

/// Particles in ℝ³ joined by springs, V = Σ_e (k_e/2)(‖q_i − q_j‖ − L_e)².
/// The invariants are π_e = ‖q_i − q_j‖².
class SpringNetwork3D final : public SystemModel, public InvariantStructure {
 public:
  /// Throws BadTopology on out-of-range or self-referencing springs and
  /// std::invalid_argument on non-positive masses or negative k, L.
  SpringNetwork3D(std::vector<double> masses, std::vector<Spring> springs, LoadSchedule load = {},
                  KernelMode mode = KernelMode::Parallel);

  std::size_t particle_count() const { return masses_.size(); }
  const std::vector<double>& masses() const { return masses_; }
  const std::vector<Spring>& springs() const { return springs_; }
  const LoadSchedule& load() const { return load_; }
  KernelMode kernel_mode() const { return mode_; }
  void set_kernel_mode(KernelMode mode) { mode_ = mode; }

  // SystemModel
  std::size_t dim() const override { return 3 * masses_.size(); }
  const SymMat& mass() const override { return M_; }
  double potential(const Vec& q) const override;
  Vec grad_potential(const Vec& q) const override;
  PotentialIncrement potential_increment(const Vec& x, const Vec& y) const override;
  Vec external_force(const Vec& q, double t) const override;
  bool has_external_force() const override { return !load_.empty(); }
  const InvariantStructure* symmetry() const override { return this; }
  bool ambient_particles() const override { return true; }

  // InvariantStructure
  std::size_t invariant_count() const override { return springs_.size(); }
  Vec invariants(const Vec& q) const override;
  Mat invariant_jacobian(const Vec& q) const override;
  Vec jacobian_transpose_times(const Vec& q, const Vec& w) const override;
  double reduced_potential(const Vec& pi) const override;
  /// Throws SpringCollapse when π_e = 0 with L_e > 0.
  Vec reduced_grad(const Vec& pi) const override;
  PotentialIncrement reduced_increment(const Vec& pi_x, const Vec& pi_y) const override;

 private:
  // Increment of one spring energy from the endpoint invariants and their
  // separately computed difference.
  PotentialIncrement spring_increment(std::size_t e, double pi_x, double pi_y, double dpi) const;
  Vec scatter_transpose(const Vec& q, const Vec& w) const;
  Vec gather_transpose(const Vec& q, const Vec& w) const;

  std::vector<double> masses_;
  std::vector<Spring> springs_;
  LoadSchedule load_;
  KernelMode mode_;
  SymMat M_;
  // Incidence in CSR form: springs touching particle p are
  // incident_[offsets_[p] .. offsets_[p+1]).
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> incident_;
};

// ---------------------------------------------------------------------------
// Catalog setups

template <class System>
struct ExampleSetup {
  System system;
  State initial;
  SolverConfig solver;
  /// Dissipation parameters of the fully dissipative case.
  DissipationConfig dissipation;
  double duration = 0.0;
};

ExampleSetup<TwoMassPolynomial> make_example1();
ExampleSetup<TwoMassNonPolynomial> make_example2();

/// The four combinations of force and velocity dissipation.
enum class DissipationCase { Conservative, ForceOnly, VelocityOnly, Full };

std::string_view to_string(DissipationCase c);
DissipationConfig dissipation_case(const DissipationConfig& full, DissipationCase c);

enum class SpringTopology { Pair, Cube, Chain, Random };

std::string_view to_string(SpringTopology t);
std::optional<SpringTopology> parse_spring_topology(std::string_view name);

struct SpringDemoOptions {
  SpringTopology topology = SpringTopology::Cube;
  /// Ignored for Pair and Cube.
  std::size_t n_particles = 8;
  double mass = 1.0;
  double stiffness = 50.0;
  /// Load pulse scale breakpoints; empty for a free network.
  std::vector<std::pair<double, double>> pulse = {{0.0, 0.0}, {0.5, 5.0}, {1.0, 0.0}};
  std::uint64_t seed = 1;
  KernelMode mode = KernelMode::Parallel;
};

struct SpringDemo {
  SpringNetwork3D network;
  State initial;
  SolverConfig solver;
  double duration = 0.0;
};

/// Rest lengths equal the initial distances, so the network starts at rest
/// in equilibrium. The pulse pushes the first two and last two particles
/// with opposite patterns, giving net force and torque.
SpringDemo make_spring_demo(const SpringDemoOptions& options = {});

}  // namespace gdr
