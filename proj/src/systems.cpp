#include "gdr/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace gdr {

namespace {

// Below this many particles or springs the OpenMP loops run on one thread.
constexpr std::size_t kParallelThreshold = 512;

std::size_t flat_index(std::size_t n, const std::size_t* idx, std::size_t rank) {
  std::size_t k = 0;
  for (std::size_t r = 0; r < rank; ++r) k = k * n + idx[r];
  return k;
}

// T[v_1, ..., v_r] for a full-rank contraction, with the matching sum of
// absolute products.
PotentialIncrement contract(const CoefficientTensor& T, std::initializer_list<const Vec*> vs) {
  PotentialIncrement out;
  const std::size_t n = T.n;
  for (std::size_t k = 0; k < T.values.size(); ++k) {
    if (T.values[k] == 0.0) continue;
    double prod = T.values[k];
    std::size_t rem = k;
    std::size_t r = T.rank;
    const Vec* const* v = vs.begin();
    for (; r-- > 0;) {
      prod *= (*v[r])[rem % n];
      rem /= n;
    }
    out.value += prod;
    out.magnitude += std::abs(prod);
  }
  return out;
}

double abs_dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] * b[i]);
  return acc;
}

}  // namespace

CoefficientTensor CoefficientTensor::zeros(std::size_t n, std::size_t rank) {
  if (rank != 3 && rank != 4) throw std::invalid_argument("CoefficientTensor: rank must be 3 or 4");
  std::size_t size = 1;
  for (std::size_t r = 0; r < rank; ++r) size *= n;
  return {n, rank, std::vector<double>(size, 0.0)};
}

double& CoefficientTensor::at(std::initializer_list<std::size_t> idx) {
  if (idx.size() != rank) throw DimensionMismatch("CoefficientTensor: wrong index count");
  for (std::size_t i : idx) {
    if (i >= n) throw DimensionMismatch("CoefficientTensor: index out of range");
  }
  return values[flat_index(n, idx.begin(), rank)];
}

void CoefficientTensor::symmetrize() {
  if (values.empty()) return;
  std::vector<double> out(values.size(), 0.0);
  std::vector<std::size_t> idx(rank), perm(rank), permuted(rank);
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::size_t rem = k;
    for (std::size_t r = rank; r-- > 0;) {
      idx[r] = rem % n;
      rem /= n;
    }
    std::iota(perm.begin(), perm.end(), 0);
    double sum = 0.0;
    int count = 0;
    do {
      for (std::size_t r = 0; r < rank; ++r) permuted[r] = idx[perm[r]];
      sum += values[flat_index(n, permuted.data(), rank)];
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out[k] = sum / count;
  }
  values = std::move(out);
}

// ---------------------------------------------------------------------------

TwoMassPolynomial::TwoMassPolynomial(SymMat M, SymMat V2, CoefficientTensor V3, CoefficientTensor V4)
    : M_(std::move(M)), V2_(std::move(V2)), V3_(std::move(V3)), V4_(std::move(V4)) {
  const std::size_t n = M_.dim();
  if (V2_.dim() != n) throw DimensionMismatch("TwoMassPolynomial: V2 dimension");
  if (!V3_.values.empty() && (V3_.n != n || V3_.rank != 3)) throw DimensionMismatch("TwoMassPolynomial: V3 shape");
  if (!V4_.values.empty() && (V4_.n != n || V4_.rank != 4)) throw DimensionMismatch("TwoMassPolynomial: V4 shape");
  if (!M_.is_spd()) throw NotSPD("TwoMassPolynomial: mass matrix");
  V3_.symmetrize();
  V4_.symmetrize();
}

double TwoMassPolynomial::potential(const Vec& q) const {
  const std::size_t n = dim();
  double v = 0.5 * dot(q, V2_ * q);
  if (!V3_.values.empty()) {
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) s += V3_.values[(a * n + b) * n + c] * q[a] * q[b] * q[c];
    v += s / 3.0;
  }
  if (!V4_.values.empty()) {
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          for (std::size_t d = 0; d < n; ++d)
            s += V4_.values[((a * n + b) * n + c) * n + d] * q[a] * q[b] * q[c] * q[d];
    v += 0.25 * s;
  }
  return v;
}

Vec TwoMassPolynomial::grad_potential(const Vec& q) const {
  const std::size_t n = dim();
  Vec g = V2_ * q;
  if (!V3_.values.empty()) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) g[a] += V3_.values[(a * n + b) * n + c] * q[b] * q[c];
  }
  if (!V4_.values.empty()) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          for (std::size_t d = 0; d < n; ++d)
            g[a] += V4_.values[((a * n + b) * n + c) * n + d] * q[b] * q[c] * q[d];
  }
  return g;
}

PotentialIncrement TwoMassPolynomial::potential_increment(const Vec& x, const Vec& y) const {
  const Vec d = y - x;
  const Vec sum = x + y;
  const Vec w = V2_ * sum;
  PotentialIncrement out{0.5 * dot(d, w), 0.5 * abs_dot(d, w)};
  auto add = [&](const PotentialIncrement& p, double weight) {
    out.value += weight * p.value;
    out.magnitude += weight * p.magnitude;
  };
  // T[y,...,y] − T[x,...,x] telescoped into terms that each carry d.
  if (!V3_.values.empty()) {
    add(contract(V3_, {&d, &y, &y}), 1.0 / 3.0);
    add(contract(V3_, {&x, &d, &y}), 1.0 / 3.0);
    add(contract(V3_, {&x, &x, &d}), 1.0 / 3.0);
  }
  if (!V4_.values.empty()) {
    add(contract(V4_, {&d, &y, &y, &y}), 0.25);
    add(contract(V4_, {&x, &d, &y, &y}), 0.25);
    add(contract(V4_, {&x, &x, &d, &y}), 0.25);
    add(contract(V4_, {&x, &x, &x, &d}), 0.25);
  }
  return out;
}

std::optional<SymMat> TwoMassPolynomial::analytic_hessian(const Vec& q) const {
  const std::size_t n = dim();
  Mat H = V2_.mat();
  if (!V3_.values.empty()) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) H(a, b) += 2.0 * V3_.values[(a * n + b) * n + c] * q[c];
  }
  if (!V4_.values.empty()) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c)
          for (std::size_t d = 0; d < n; ++d)
            H(a, b) += 3.0 * V4_.values[((a * n + b) * n + c) * n + d] * q[c] * q[d];
  }
  return SymMat::symmetrized(H);
}

// ---------------------------------------------------------------------------

TwoMassNonPolynomial::TwoMassNonPolynomial(SymMat M, SymMat V2, SymMat VN, SymMat VD, int n_exp)
    : M_(std::move(M)), V2_(std::move(V2)), VN_(std::move(VN)), VD_(std::move(VD)), n_(n_exp) {
  const std::size_t n = M_.dim();
  if (V2_.dim() != n || VN_.dim() != n || VD_.dim() != n) throw DimensionMismatch("TwoMassNonPolynomial: dimensions");
  if (n_ < 0) throw std::invalid_argument("TwoMassNonPolynomial: negative exponent");
  if (!M_.is_spd()) throw NotSPD("TwoMassNonPolynomial: mass matrix");
}

double TwoMassNonPolynomial::potential(const Vec& q) const {
  const double w = 1.0 + dot(q, VD_ * q);
  return 0.5 * (dot(q, V2_ * q) + dot(q, VN_ * q) / std::pow(w, n_));
}

Vec TwoMassNonPolynomial::grad_potential(const Vec& q) const {
  const Vec dq = VD_ * q;
  const Vec nq = VN_ * q;
  const double w = 1.0 + dot(q, dq);
  const double b = dot(q, nq);
  const double wn = std::pow(w, -n_);
  Vec g = V2_ * q;
  axpy(wn, nq, g);
  axpy(-n_ * b * wn / w, dq, g);
  return g;
}

PotentialIncrement TwoMassNonPolynomial::potential_increment(const Vec& x, const Vec& y) const {
  const Vec d = y - x;
  const Vec sum = x + y;
  const Vec a2 = V2_ * sum, an = VN_ * sum, ad = VD_ * sum;
  const double wx = 1.0 + dot(x, VD_ * x);
  const double wy = 1.0 + dot(y, VD_ * y);
  const double bx = dot(x, VN_ * x);
  const double dw = dot(d, ad);
  const double db = dot(d, an);
  // w_yⁿ − w_xⁿ = Δw Σ_k w_y^k w_x^{n−1−k}
  double geo = 0.0;
  for (int k = 0; k < n_; ++k) geo += std::pow(wy, k) * std::pow(wx, n_ - 1 - k);
  const double wxn = std::pow(wx, n_), wyn = std::pow(wy, n_);
  const double inv_diff = -dw * geo / (wxn * wyn);
  const double value = 0.5 * (dot(d, a2) + db / wyn + bx * inv_diff);
  const double magnitude =
      0.5 * (abs_dot(d, a2) + abs_dot(d, an) / wyn + std::abs(bx) * abs_dot(d, ad) * geo / (wxn * wyn));
  return {value, magnitude};
}

// ---------------------------------------------------------------------------

LinearOscillator::LinearOscillator(SymMat M, SymMat K) : M_(std::move(M)), K_(std::move(K)) {
  if (K_.dim() != M_.dim()) throw DimensionMismatch("LinearOscillator: M and K dimensions");
  if (!M_.is_spd()) throw NotSPD("LinearOscillator: mass matrix");
  if (!K_.is_spd()) throw NotSPD("LinearOscillator: stiffness matrix");
  const std::size_t n = M_.dim();

  const SymmetricEigen me = symmetric_eigen(M_);
  Mat m_inv_half(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        m_inv_half(i, j) += me.vectors(i, k) * me.vectors(j, k) / std::sqrt(me.values[k]);

  const SymMat A = SymMat::symmetrized(m_inv_half * K_.mat() * m_inv_half);
  const SymmetricEigen ae = symmetric_eigen(A);
  phi_ = m_inv_half * ae.vectors;
  omega_ = Vec(n);
  for (std::size_t k = 0; k < n; ++k) omega_[k] = std::sqrt(ae.values[k]);
}

double LinearOscillator::potential(const Vec& q) const { return 0.5 * dot(q, K_ * q); }

Vec LinearOscillator::grad_potential(const Vec& q) const { return K_ * q; }

PotentialIncrement LinearOscillator::potential_increment(const Vec& x, const Vec& y) const {
  const Vec d = y - x;
  const Vec w = K_ * (x + y);
  return {0.5 * dot(d, w), 0.5 * abs_dot(d, w)};
}

State LinearOscillator::exact(const State& initial, double t) const {
  const std::size_t n = dim();
  const Vec y0 = transpose_times(phi_, M_ * initial.q);
  const Vec v0 = transpose_times(phi_, M_ * initial.s);
  const double tau = t - initial.t;
  Vec y(n), v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = omega_[k];
    const double c = std::cos(w * tau), s = std::sin(w * tau);
    y[k] = y0[k] * c + v0[k] / w * s;
    v[k] = -y0[k] * w * s + v0[k] * c;
  }
  return {phi_ * y, phi_ * v, t};
}

// ---------------------------------------------------------------------------

SpringNetwork3D::SpringNetwork3D(std::vector<double> masses, std::vector<Spring> springs, LoadSchedule load,
                                 KernelMode mode)
    : masses_(std::move(masses)), springs_(std::move(springs)), load_(std::move(load)), mode_(mode) {
  const std::size_t n = masses_.size();
  if (n == 0) throw BadTopology("SpringNetwork3D: no particles");
  for (double m : masses_) {
    if (!(m > 0.0)) throw std::invalid_argument("SpringNetwork3D: particle masses must be positive");
  }
  for (std::size_t e = 0; e < springs_.size(); ++e) {
    const Spring& sp = springs_[e];
    if (sp.i >= n || sp.j >= n) {
      throw BadTopology("SpringNetwork3D: spring " + std::to_string(e) + " references a missing particle");
    }
    if (sp.i == sp.j) throw BadTopology("SpringNetwork3D: spring " + std::to_string(e) + " joins a particle to itself");
    if (!(sp.stiffness >= 0.0) || !(sp.rest_length >= 0.0)) {
      throw std::invalid_argument("SpringNetwork3D: spring " + std::to_string(e) + " has negative stiffness or length");
    }
  }
  if (!load_.empty() && load_.base_force().size() != 3 * n) {
    throw DimensionMismatch("SpringNetwork3D: load base force dimension");
  }

  Vec diag(3 * n);
  for (std::size_t p = 0; p < n; ++p) diag[3 * p] = diag[3 * p + 1] = diag[3 * p + 2] = masses_[p];
  M_ = SymMat::diagonal(diag);

  offsets_.assign(n + 1, 0);
  for (const Spring& sp : springs_) {
    ++offsets_[sp.i + 1];
    ++offsets_[sp.j + 1];
  }
  for (std::size_t p = 0; p < n; ++p) offsets_[p + 1] += offsets_[p];
  incident_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t e = 0; e < springs_.size(); ++e) {
    incident_[fill[springs_[e].i]++] = e;
    incident_[fill[springs_[e].j]++] = e;
  }
}

Vec SpringNetwork3D::invariants(const Vec& q) const {
  if (q.size() != dim()) throw DimensionMismatch("SpringNetwork3D: coordinate dimension");
  const std::size_t ne = springs_.size();
  Vec pi(ne);
  const bool par = mode_ == KernelMode::Parallel && ne >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t e = 0; e < ne; ++e) {
    const Spring& sp = springs_[e];
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = q[3 * sp.i + c] - q[3 * sp.j + c];
      s += d * d;
    }
    pi[e] = s;
  }
  return pi;
}

Mat SpringNetwork3D::invariant_jacobian(const Vec& q) const {
  Mat J(springs_.size(), dim());
  for (std::size_t e = 0; e < springs_.size(); ++e) {
    const Spring& sp = springs_[e];
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = q[3 * sp.i + c] - q[3 * sp.j + c];
      J(e, 3 * sp.i + c) = 2.0 * d;
      J(e, 3 * sp.j + c) = -2.0 * d;
    }
  }
  return J;
}

Vec SpringNetwork3D::scatter_transpose(const Vec& q, const Vec& w) const {
  Vec out(dim());
  for (std::size_t e = 0; e < springs_.size(); ++e) {
    const Spring& sp = springs_[e];
    for (std::size_t c = 0; c < 3; ++c) {
      const double f = 2.0 * w[e] * (q[3 * sp.i + c] - q[3 * sp.j + c]);
      out[3 * sp.i + c] += f;
      out[3 * sp.j + c] -= f;
    }
  }
  return out;
}

Vec SpringNetwork3D::gather_transpose(const Vec& q, const Vec& w) const {
  const std::size_t n = masses_.size();
  Vec out(dim());
  const bool par = n >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t k = offsets_[p]; k < offsets_[p + 1]; ++k) {
      const Spring& sp = springs_[incident_[k]];
      const std::size_t other = sp.i == p ? sp.j : sp.i;
      for (std::size_t c = 0; c < 3; ++c) {
        out[3 * p + c] += 2.0 * w[incident_[k]] * (q[3 * p + c] - q[3 * other + c]);
      }
    }
  }
  return out;
}

Vec SpringNetwork3D::jacobian_transpose_times(const Vec& q, const Vec& w) const {
  if (q.size() != dim()) throw DimensionMismatch("SpringNetwork3D: coordinate dimension");
  if (w.size() != springs_.size()) throw DimensionMismatch("SpringNetwork3D: invariant-space vector dimension");
  return mode_ == KernelMode::Serial ? scatter_transpose(q, w) : gather_transpose(q, w);
}

double SpringNetwork3D::reduced_potential(const Vec& pi) const {
  if (pi.size() != springs_.size()) throw DimensionMismatch("SpringNetwork3D: invariant dimension");
  double v = 0.0;
  for (std::size_t e = 0; e < springs_.size(); ++e) {
    const double d = std::sqrt(pi[e]) - springs_[e].rest_length;
    v += 0.5 * springs_[e].stiffness * d * d;
  }
  return v;
}

PotentialIncrement SpringNetwork3D::spring_increment(std::size_t e, double pi_x, double pi_y, double dpi) const {
  const Spring& sp = springs_[e];
  const double rx = std::sqrt(pi_x), ry = std::sqrt(pi_y);
  const double dr = rx + ry > 0.0 ? dpi / (rx + ry) : 0.0;
  return {0.5 * sp.stiffness * dr * (rx + ry - 2.0 * sp.rest_length),
          0.5 * sp.stiffness * std::abs(dr) * (rx + ry + 2.0 * sp.rest_length)};
}

PotentialIncrement SpringNetwork3D::reduced_increment(const Vec& pi_x, const Vec& pi_y) const {
  if (pi_x.size() != springs_.size() || pi_y.size() != springs_.size()) {
    throw DimensionMismatch("SpringNetwork3D: invariant dimension");
  }
  PotentialIncrement out;
  for (std::size_t e = 0; e < springs_.size(); ++e) {
    const PotentialIncrement p = spring_increment(e, pi_x[e], pi_y[e], pi_y[e] - pi_x[e]);
    out.value += p.value;
    out.magnitude += p.magnitude;
  }
  return out;
}

PotentialIncrement SpringNetwork3D::potential_increment(const Vec& x, const Vec& y) const {
  if (x.size() != dim() || y.size() != dim()) throw DimensionMismatch("SpringNetwork3D: coordinate dimension");
  const Vec pi_x = invariants(x), pi_y = invariants(y);
  PotentialIncrement out;
  for (std::size_t e = 0; e < springs_.size(); ++e) {
    const Spring& sp = springs_[e];
    // π_y − π_x = ⟨d_y − d_x, d_y + d_x⟩ with d = q_i − q_j.
    double dpi = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double ddy = (y[3 * sp.i + c] - x[3 * sp.i + c]) - (y[3 * sp.j + c] - x[3 * sp.j + c]);
      const double sdy = (y[3 * sp.i + c] - y[3 * sp.j + c]) + (x[3 * sp.i + c] - x[3 * sp.j + c]);
      dpi += ddy * sdy;
    }
    const PotentialIncrement p = spring_increment(e, pi_x[e], pi_y[e], dpi);
    out.value += p.value;
    out.magnitude += p.magnitude;
  }
  return out;
}

Vec SpringNetwork3D::reduced_grad(const Vec& pi) const {
  const std::size_t ne = springs_.size();
  if (pi.size() != ne) throw DimensionMismatch("SpringNetwork3D: invariant dimension");
  for (std::size_t e = 0; e < ne; ++e) {
    if (pi[e] <= 0.0 && springs_[e].rest_length > 0.0) {
      throw SpringCollapse("SpringNetwork3D: spring " + std::to_string(e) + " has collapsed to zero length");
    }
  }
  Vec r(ne);
  const bool par = mode_ == KernelMode::Parallel && ne >= kParallelThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::size_t e = 0; e < ne; ++e) {
    const Spring& sp = springs_[e];
    r[e] = sp.rest_length > 0.0 ? 0.5 * sp.stiffness * (1.0 - sp.rest_length / std::sqrt(pi[e]))
                                : 0.5 * sp.stiffness;
  }
  return r;
}

double SpringNetwork3D::potential(const Vec& q) const { return reduced_potential(invariants(q)); }

Vec SpringNetwork3D::grad_potential(const Vec& q) const {
  return jacobian_transpose_times(q, reduced_grad(invariants(q)));
}

Vec SpringNetwork3D::external_force(const Vec&, double t) const {
  if (load_.empty()) return Vec(dim());
  return load_.eval(t);
}

// ---------------------------------------------------------------------------

ExampleSetup<TwoMassPolynomial> make_example1() {
  const SymMat M = SymMat::identity(2);
  const SymMat V2{{16.0, -15.0}, {-15.0, 16.0}};
  CoefficientTensor V4 = CoefficientTensor::zeros(2, 4);
  V4.at({0, 0, 0, 0}) = 15.0;

  SolverConfig solver;
  solver.dt = 1e-3;
  solver.rel_tol = 1e-10;

  DissipationConfig diss;
  diss.chi_f = 0.0025;
  diss.chi_s = 0.008;
  diss.D = V2;
  diss.h = solver.dt;

  return {TwoMassPolynomial(M, V2, {}, V4), State{Vec{1.0, 0.918}, Vec{0.0, 0.0}, 0.0}, solver, diss, 50.0};
}

ExampleSetup<TwoMassNonPolynomial> make_example2() {
  const SymMat M = SymMat::identity(2);
  const SymMat V2{{10.0, 0.0}, {0.0, 10.0}};
  const SymMat VN{{300.0, -300.0}, {-300.0, 300.0}};
  const SymMat VD{{5.0, -5.0}, {-5.0, 5.0}};

  SolverConfig solver;
  solver.dt = 1e-4;
  solver.rel_tol = 1e-10;

  DissipationConfig diss;
  diss.chi_f = 0.001;
  diss.chi_s = 0.001;
  diss.D = V2;
  diss.h = solver.dt;

  return {TwoMassNonPolynomial(M, V2, VN, VD, 3), State{Vec{-0.41726, -0.49840}, Vec{-2.53182, -2.79761}, 0.0},
          solver, diss, 50.0};
}

std::string_view to_string(DissipationCase c) {
  switch (c) {
    case DissipationCase::Conservative: return "conservative";
    case DissipationCase::ForceOnly: return "force_only";
    case DissipationCase::VelocityOnly: return "velocity_only";
    case DissipationCase::Full: return "full";
  }
  return "unknown";
}

DissipationConfig dissipation_case(const DissipationConfig& full, DissipationCase c) {
  DissipationConfig out = full;
  if (c == DissipationCase::Conservative || c == DissipationCase::VelocityOnly) out.chi_f = 0.0;
  if (c == DissipationCase::Conservative || c == DissipationCase::ForceOnly) out.chi_s = 0.0;
  return out;
}

std::string_view to_string(SpringTopology t) {
  switch (t) {
    case SpringTopology::Pair: return "pair";
    case SpringTopology::Cube: return "cube";
    case SpringTopology::Chain: return "chain";
    case SpringTopology::Random: return "random";
  }
  return "unknown";
}

std::optional<SpringTopology> parse_spring_topology(std::string_view name) {
  for (SpringTopology t : {SpringTopology::Pair, SpringTopology::Cube, SpringTopology::Chain, SpringTopology::Random}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

SpringDemo make_spring_demo(const SpringDemoOptions& options) {
  std::vector<Vec3> points;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  switch (options.topology) {
    case SpringTopology::Pair:
      points = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
      edges = {{0, 1}};
      break;
    case SpringTopology::Cube:
      for (std::size_t k = 0; k < 8; ++k) {
        points.push_back({double(k & 1), double((k >> 1) & 1), double((k >> 2) & 1)});
      }
      // Corners differing in one coordinate are edges, in two coordinates
      // face diagonals.
      for (std::size_t a = 0; a < 8; ++a) {
        for (std::size_t b = a + 1; b < 8; ++b) {
          const int bits = __builtin_popcount(static_cast<unsigned>(a ^ b));
          if (bits == 1 || bits == 2) edges.emplace_back(a, b);
        }
      }
      break;
    case SpringTopology::Chain:
      if (options.n_particles < 2) throw BadTopology("make_spring_demo: chain needs at least 2 particles");
      for (std::size_t k = 0; k < options.n_particles; ++k) points.push_back({double(k), 0.25 * double(k % 2), 0.0});
      for (std::size_t k = 0; k + 1 < options.n_particles; ++k) {
        edges.emplace_back(k, k + 1);
        if (k + 2 < options.n_particles) edges.emplace_back(k, k + 2);
      }
      break;
    case SpringTopology::Random: {
      if (options.n_particles < 2) throw BadTopology("make_spring_demo: random network needs at least 2 particles");
      std::mt19937_64 rng(options.seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (std::size_t k = 0; k < options.n_particles; ++k) points.push_back({unit(rng), unit(rng), unit(rng)});
      for (std::size_t a = 0; a < options.n_particles; ++a)
        for (std::size_t b = a + 1; b < options.n_particles; ++b) edges.emplace_back(a, b);
      break;
    }
  }

  const std::size_t n = points.size();
  Vec q(3 * n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t c = 0; c < 3; ++c) q[3 * p + c] = points[p][c];

  std::vector<Spring> springs;
  for (auto [a, b] : edges) {
    double len2 = 0.0;
    for (std::size_t c = 0; c < 3; ++c) len2 += (points[a][c] - points[b][c]) * (points[a][c] - points[b][c]);
    springs.push_back({a, b, options.stiffness, std::sqrt(len2)});
  }

  LoadSchedule load;
  if (!options.pulse.empty()) {
    Vec base(3 * n);
    const std::size_t targets[4] = {0, 1, n - 2, n - 1};
    const Vec3 pattern[4] = {{0.0, -1.0, -1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, {0.0, -1.0, -1.0}};
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t c = 0; c < 3; ++c) base[3 * targets[k] + c] += pattern[k][c];
    load = LoadSchedule(base, options.pulse);
  }

  SolverConfig solver;
  solver.dt = 0.01;
  solver.rel_tol = 1e-10;

  const double duration = std::max(5.0, (load.empty() ? 0.0 : load.end_time()) + 4.0);
  return {SpringNetwork3D(std::vector<double>(n, options.mass), std::move(springs), load, options.mode),
          State{q, Vec(3 * n), 0.0}, solver, duration};
}

}  // namespace gdr
