#include "gdr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <utility>

namespace gdr {

MomentaSample momenta(const SystemModel& sys, const State& state) {
  MomentaSample m;
  m.t = state.t;
  m.T = sys.kinetic_energy(state.s);
  m.V = sys.potential(state.q);
  m.E = m.T + m.V;
  if (!sys.ambient_particles()) return m;
  m.has_momenta = true;
  const Vec p = sys.mass() * state.s;
  for (std::size_t i = 0; i + 2 < p.size(); i += 3) {
    const Vec3 pi{p[i], p[i + 1], p[i + 2]};
    const Vec3 c = cross({state.q[i], state.q[i + 1], state.q[i + 2]}, pi);
    for (std::size_t k = 0; k < 3; ++k) {
      m.l[k] += pi[k];
      m.j[k] += c[k];
    }
  }
  return m;
}

double energy_balance_residual(const StepReport& report, const MomentaSample& prev) {
  const double dT = report.kinetic - prev.T;
  const double dV = report.potential - prev.V;
  return (dT + dV) - (report.work_ext - report.diss_f - report.diss_s);
}

std::size_t QuotientSeries::masked_count() const {
  return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), true));
}

double QuotientSeries::mask_rate() const {
  return times.empty() ? 0.0 : static_cast<double>(masked_count()) / static_cast<double>(times.size());
}

double QuotientSeries::median_log2() const {
  std::vector<double> vals;
  for (std::size_t k = 0; k < log2Q.size(); ++k) {
    if (!masked[k]) vals.push_back(log2Q[k]);
  }
  if (vals.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  if (vals.size() % 2 == 1) return vals[mid];
  const double upper = vals[mid];
  const double lower = *std::max_element(vals.begin(), vals.begin() + mid);
  return 0.5 * (lower + upper);
}

void check_sample_grid(const std::vector<double>& t_samples, double h, double t0) {
  if (!(h > 0.0)) throw std::invalid_argument("quotient: h must be positive");
  for (double t : t_samples) {
    const double k = (t - t0) / h;
    if (k < -1e-9 || std::abs(k - std::round(k)) > 1e-6) {
      throw GridMisaligned("quotient: sample time " + std::to_string(t) + " is not on the grid of step " +
                           std::to_string(h));
    }
  }
}

namespace {

void append_sample(QuotientSeries& out, double t, double num, double den, double scale) {
  out.times.push_back(t);
  const bool masked = !(den >= kQuotientMask * (1.0 + scale)) || !std::isfinite(num);
  out.masked.push_back(masked);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double q = masked ? nan : num / den;
  out.Q.push_back(q);
  out.log2Q.push_back(masked ? nan : std::log2(q));
}

void require_count(const std::vector<Vec>& run, std::size_t n) {
  if (run.size() != n) throw std::runtime_error("quotient: runner returned the wrong number of samples");
}

// Runs the resolutions concurrently; the first exception wins.
std::vector<std::vector<Vec>> run_resolutions(const QuotientRunner& runner, const std::vector<double>& steps,
                                              const std::vector<double>& t_samples) {
  const int count = static_cast<int>(steps.size());
  std::vector<std::vector<Vec>> runs(steps.size());
  std::vector<std::exception_ptr> errors(steps.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < count; ++k) {
    try {
      runs[k] = runner(steps[k], t_samples);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& r : runs) require_count(r, t_samples.size());
  return runs;
}

}  // namespace

QuotientSeries quotient_I(const ExactSolution& reference, const QuotientRunner& runner, double h,
                          const std::vector<double>& t_samples, double t0) {
  check_sample_grid(t_samples, h, t0);
  const auto runs = run_resolutions(runner, {h, h / 2.0}, t_samples);
  QuotientSeries out;
  for (std::size_t k = 0; k < t_samples.size(); ++k) {
    const Vec exact = reference(t_samples[k]);
    append_sample(out, t_samples[k], norm(runs[0][k] - exact), norm(runs[1][k] - exact), norm(exact));
  }
  return out;
}

QuotientSeries quotient_II(const QuotientRunner& runner, double h, const std::vector<double>& t_samples, double t0) {
  check_sample_grid(t_samples, h, t0);
  const auto runs = run_resolutions(runner, {h, h / 2.0, h / 4.0}, t_samples);
  QuotientSeries out;
  for (std::size_t k = 0; k < t_samples.size(); ++k) {
    append_sample(out, t_samples[k], norm(runs[0][k] - runs[1][k]), norm(runs[1][k] - runs[2][k]),
                  norm(runs[2][k]));
  }
  return out;
}

QuotientRunner make_integrator_runner(const SystemModel& sys, const ForceScheme& scheme, const SolverConfig& base,
                                      const State& initial) {
  return [&sys, scheme, base, initial](double h, const std::vector<double>& t_samples) {
    SolverConfig cfg = base;
    cfg.dt = h;
    std::vector<std::pair<std::size_t, std::size_t>> wanted;
    for (std::size_t k = 0; k < t_samples.size(); ++k) {
      wanted.emplace_back(static_cast<std::size_t>(std::llround((t_samples[k] - initial.t) / h)), k);
    }
    std::sort(wanted.begin(), wanted.end());
    const std::size_t last = wanted.empty() ? 0 : wanted.back().first;
    const double t_end = initial.t + static_cast<double>(last) * h;

    std::vector<Vec> out(t_samples.size());
    std::size_t cursor = 0;
    integrate(sys, scheme, cfg, initial, t_end, [&](std::size_t index, const StepReport& rep) {
      while (cursor < wanted.size() && wanted[cursor].first == index) {
        out[wanted[cursor].second] = stack(rep.state.q, rep.state.s);
        ++cursor;
      }
    });
    return out;
  };
}

std::vector<double> uniform_samples(double t0, double duration, double every) {
  if (!(every > 0.0)) throw std::invalid_argument("uniform_samples: spacing must be positive");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor(duration / every + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) out.push_back(t0 + static_cast<double>(k) * every);
  return out;
}

}  // namespace gdr
