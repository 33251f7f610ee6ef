#include "gdr/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gdr {

Vec InvariantStructure::jacobian_transpose_times(const Vec& q, const Vec& w) const {
  return transpose_times(invariant_jacobian(q), w);
}

PotentialIncrement InvariantStructure::reduced_increment(const Vec& pi_x, const Vec& pi_y) const {
  const double vx = reduced_potential(pi_x);
  const double vy = reduced_potential(pi_y);
  return {vy - vx, std::abs(vx) + std::abs(vy)};
}

PotentialIncrement SystemModel::potential_increment(const Vec& x, const Vec& y) const {
  const double vx = potential(x);
  const double vy = potential(y);
  return {vy - vx, std::abs(vx) + std::abs(vy)};
}

Vec SystemModel::external_force(const Vec&, double) const { return Vec(dim()); }

namespace {

void require_particles(const Vec& q) {
  if (q.size() % 3 != 0) throw DimensionMismatch("generator: coordinate count is not a multiple of 3");
}

}  // namespace

Vec translation_generator(const Vec3& a, const Vec& q) {
  require_particles(q);
  Vec out(q.size());
  for (std::size_t i = 0; i < q.size(); i += 3) {
    out[i] = a[0];
    out[i + 1] = a[1];
    out[i + 2] = a[2];
  }
  return out;
}

Vec rotation_generator(const Vec3& theta, const Vec& q) {
  require_particles(q);
  Vec out(q.size());
  for (std::size_t i = 0; i < q.size(); i += 3) {
    const Vec3 c = cross(theta, {q[i], q[i + 1], q[i + 2]});
    out[i] = c[0];
    out[i + 1] = c[1];
    out[i + 2] = c[2];
  }
  return out;
}

LoadSchedule::LoadSchedule(Vec base_force, std::vector<std::pair<double, double>> breakpoints)
    : base_(std::move(base_force)), breakpoints_(std::move(breakpoints)) {
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i].first > breakpoints_[i - 1].first)) {
      throw std::invalid_argument("LoadSchedule: breakpoints must be strictly increasing in t");
    }
  }
}

double LoadSchedule::scale(double t) const {
  if (breakpoints_.empty()) return 0.0;
  if (t < breakpoints_.front().first || t > breakpoints_.back().first) return 0.0;
  if (breakpoints_.size() == 1) return breakpoints_.front().second;
  const auto upper = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t,
                                      [](double v, const auto& bp) { return v < bp.first; });
  if (upper == breakpoints_.end()) return breakpoints_.back().second;
  const auto& [t1, f1] = *upper;
  const auto& [t0, f0] = *(upper - 1);
  return f0 + (f1 - f0) * (t - t0) / (t1 - t0);
}

Vec LoadSchedule::eval(double t) const { return scale(t) * base_; }

double LoadSchedule::end_time() const { return breakpoints_.empty() ? 0.0 : breakpoints_.back().first; }

Vec eval_load(const LoadSchedule& schedule, double t) { return schedule.eval(t); }

std::vector<std::string> validate_system(const SystemModel& sys, const ValidationOptions& options) {
  std::vector<std::string> violations;
  const std::size_t n = sys.dim();
  auto report = [&](const std::string& msg) { violations.push_back(msg); };

  if (sys.mass().dim() != n) {
    report("mass matrix dimension does not match system dimension");
    return violations;
  }
  if (!sys.mass().is_spd()) report("mass matrix is not SPD");

  Vec center = options.center.empty() ? Vec(n) : options.center;
  if (center.size() != n) {
    report("validation center has wrong dimension");
    return violations;
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const InvariantStructure* sym = sys.symmetry();

  for (std::size_t k = 0; k < options.samples; ++k) {
    Vec q = center;
    for (std::size_t i = 0; i < n; ++i) q[i] += options.radius * unit(rng);

    const Vec g = sys.grad_potential(q);
    const double eps = 1e-6 * std::max(1.0, norm(q));
    Vec fd(n);
    for (std::size_t i = 0; i < n; ++i) {
      Vec qp = q, qm = q;
      qp[i] += eps;
      qm[i] -= eps;
      fd[i] = (sys.potential(qp) - sys.potential(qm)) / (2.0 * eps);
    }
    const double gerr = norm(fd - g);
    if (gerr > 1e-5 * std::max(1.0, norm(g))) {
      std::ostringstream os;
      os << "gradient mismatch at sample " << k << ": |fd - g| = " << gerr;
      report(os.str());
    }

    if (sym != nullptr) {
      const Vec pi = sym->invariants(q);
      const double v = sys.potential(q);
      const double vr = sym->reduced_potential(pi);
      if (std::abs(v - vr) > 1e-10 * std::max(1.0, std::abs(v))) {
        std::ostringstream os;
        os << "reduced potential mismatch at sample " << k << ": " << v << " vs " << vr;
        report(os.str());
      }
      const Vec chain = sym->jacobian_transpose_times(q, sym->reduced_grad(pi));
      const double cerr = norm(chain - g);
      if (cerr > 1e-10 * std::max(1.0, norm(g))) {
        std::ostringstream os;
        os << "chain rule mismatch at sample " << k << ": |DPi^T r - g| = " << cerr;
        report(os.str());
      }
    }
  }
  return violations;
}

}  // namespace gdr
