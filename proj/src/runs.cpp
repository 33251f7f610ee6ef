#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "gdr/cli.hpp"
#include "gdr/diagnostics.hpp"

namespace gdr {

using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  return out;
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) os << ',';
    os << cells[k];
  }
  os << '\n';
}

double vec3_dist(const Vec3& a, const Vec3& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < 3; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

// Accumulates drift statistics measured from the first record at or after
// the end of the load.
class DriftTracker {
 public:
  DriftTracker(const SystemModel& sys, double load_end) : sys_(sys), load_end_(load_end) {}

  MomentaSample observe(std::size_t index, const StepReport& rep) {
    const MomentaSample m = momenta(sys_, rep.state);
    if (index > 0) {
      sum.max_balance_residual = std::max(sum.max_balance_residual,
                                          std::abs(energy_balance_residual(rep, prev_)) / std::max(1.0, std::abs(prev_.E)));
      iters_ += rep.iters;
      if (rep.degenerate_fallback) ++sum.degenerate_steps;
      sum.steps = index;
    }
    if (!ref_ && rep.state.t >= load_end_ - 1e-12) ref_ = m;
    if (ref_) {
      const double scale = std::abs(ref_->E) > 0.0 ? std::abs(ref_->E) : 1.0;
      sum.max_energy_drift = std::max(sum.max_energy_drift, std::abs(m.E - ref_->E) / scale);
      if (m.has_momenta) {
        sum.max_l_drift = std::max(sum.max_l_drift, vec3_dist(m.l, ref_->l));
        sum.max_j_drift = std::max(sum.max_j_drift, vec3_dist(m.j, ref_->j));
      }
    }
    sum.final_energy = m.E;
    sum.has_momenta = m.has_momenta;
    sum.final_l = m.l;
    sum.final_j = m.j;
    sum.mean_iters = sum.steps ? static_cast<double>(iters_) / static_cast<double>(sum.steps) : 0.0;
    prev_ = m;
    return m;
  }

  RunSummary sum;

 private:
  const SystemModel& sys_;
  double load_end_;
  std::optional<MomentaSample> ref_;
  MomentaSample prev_;
  long long iters_ = 0;
};

std::vector<std::string> csv_row(const StepReport& rep, const MomentaSample& m) {
  std::vector<std::string> row;
  row.push_back(fmt(rep.state.t));
  for (double v : rep.state.q) row.push_back(fmt(v));
  for (double v : rep.state.s) row.push_back(fmt(v));
  row.push_back(fmt(m.T));
  row.push_back(fmt(m.V));
  row.push_back(fmt(m.E));
  for (std::size_t k = 0; k < 3; ++k) row.push_back(m.has_momenta ? fmt(m.l[k]) : "");
  for (std::size_t k = 0; k < 3; ++k) row.push_back(m.has_momenta ? fmt(m.j[k]) : "");
  row.push_back(fmt(rep.diss_f));
  row.push_back(fmt(rep.diss_s));
  row.push_back(std::to_string(rep.iters));
  return row;
}

std::string system_name(const RunConfig& cfg) {
  switch (cfg.system.type) {
    case SystemType::Example1: return "example1";
    case SystemType::Example2: return "example2";
    case SystemType::LinearOscillator: return "linear_oscillator";
    case SystemType::SpringNetwork: return "spring_network";
  }
  return "unknown";
}

}  // namespace

std::vector<std::string> csv_header(std::size_t n) {
  std::vector<std::string> h{"t"};
  for (std::size_t i = 0; i < n; ++i) h.push_back("q" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) h.push_back("s" + std::to_string(i));
  for (const char* c : {"T", "V", "E", "l_x", "l_y", "l_z", "j_x", "j_y", "j_z", "diss_f", "diss_s", "newton_iters"}) {
    h.emplace_back(c);
  }
  return h;
}

RunSummary run_simulation(const RunConfig& cfg, std::ostream& out) {
  const BuiltSystem built = build_system(cfg);
  const SystemModel& sys = *built.system;
  std::ofstream csv = open_output(cfg.output);
  write_row(csv, csv_header(sys.dim()));

  DriftTracker tracker(sys, built.load_end);
  integrate(sys, cfg.scheme, cfg.solver, built.initial, built.initial.t + cfg.duration,
            [&](std::size_t index, const StepReport& rep) {
              const MomentaSample m = tracker.observe(index, rep);
              write_row(csv, csv_row(rep, m));
            });
  csv.close();
  const RunSummary& s = tracker.sum;

  out << "gdr run: " << system_name(cfg) << ", scheme " << to_string(cfg.scheme.variant) << ", dt "
      << cfg.solver.dt << ", " << s.steps << " steps\n";
  out << "stationary values (t >= " << built.load_end << " s)\n";
  if (s.has_momenta) {
    out << "  l = (" << fmt_short(s.final_l[0]) << ", " << fmt_short(s.final_l[1]) << ", " << fmt_short(s.final_l[2])
        << ") kg m/s\n";
    out << "  j = (" << fmt_short(s.final_j[0]) << ", " << fmt_short(s.final_j[1]) << ", " << fmt_short(s.final_j[2])
        << ") kg m^2/s\n";
  }
  out << "  E = " << fmt_short(s.final_energy) << " J\n";
  out << "max relative energy drift: " << fmt_short(s.max_energy_drift) << "\n";
  if (s.has_momenta) {
    out << "max momentum drift: l " << fmt_short(s.max_l_drift) << ", j " << fmt_short(s.max_j_drift) << "\n";
  }
  out << "max energy balance residual: " << fmt_short(s.max_balance_residual) << "\n";
  out << "mean Newton iterations: " << s.mean_iters << "\n";
  if (s.degenerate_steps) out << "degenerate fallback steps: " << s.degenerate_steps << "\n";

  json summary{{"system", system_name(cfg)},
               {"scheme", std::string(to_string(cfg.scheme.variant))},
               {"dt", cfg.solver.dt},
               {"steps", s.steps},
               {"final_energy", s.final_energy},
               {"max_energy_drift", s.max_energy_drift},
               {"max_balance_residual", s.max_balance_residual},
               {"mean_newton_iters", s.mean_iters},
               {"degenerate_steps", s.degenerate_steps},
               {"load_end", built.load_end}};
  if (s.has_momenta) {
    summary["final_l"] = vec3_json(s.final_l);
    summary["final_j"] = vec3_json(s.final_j);
    summary["max_l_drift"] = s.max_l_drift;
    summary["max_j_drift"] = s.max_j_drift;
  }
  std::ofstream js = open_output(cfg.output + ".summary.json");
  js << summary.dump(2) << '\n';
  return s;
}

QuotientSummary run_quotient(const RunConfig& cfg, std::ostream& out) {
  const BuiltSystem built = build_system(cfg);
  const SystemModel& sys = *built.system;
  const double h = cfg.solver.dt;
  const double t0 = built.initial.t;

  double every = cfg.quotient.sample_every;
  if (every == 0.0) every = h * std::max(1.0, std::round(cfg.duration / (500.0 * h)));
  check_sample_grid({t0 + every}, h, t0);
  std::vector<double> samples = uniform_samples(t0, cfg.duration, every);
  // ξ(t0) is shared by all runs and carries no information.
  if (!samples.empty()) samples.erase(samples.begin());

  const QuotientRunner runner = make_integrator_runner(sys, cfg.scheme, cfg.solver, built.initial);
  const QuotientSeries q2 = quotient_II(runner, h, samples, t0);
  std::optional<QuotientSeries> q1;
  if (built.oscillator) {
    const LinearOscillator* osc = built.oscillator;
    const State init = built.initial;
    q1 = quotient_I(
        [osc, init](double t) {
          const State e = osc->exact(init, t);
          return stack(e.q, e.s);
        },
        runner, h, samples, t0);
  }

  std::ofstream csv = open_output(cfg.output);
  std::vector<std::string> header{"t", "Q_II", "log2Q_II", "masked_II"};
  if (q1) {
    for (const char* c : {"Q_I", "log2Q_I", "masked_I"}) header.emplace_back(c);
  }
  write_row(csv, header);
  auto cell = [](bool masked, double v) { return masked ? std::string() : fmt(v); };
  for (std::size_t k = 0; k < q2.size(); ++k) {
    std::vector<std::string> row{fmt(q2.times[k]), cell(q2.masked[k], q2.Q[k]), cell(q2.masked[k], q2.log2Q[k]),
                                 q2.masked[k] ? "1" : "0"};
    if (q1) {
      row.push_back(cell(q1->masked[k], q1->Q[k]));
      row.push_back(cell(q1->masked[k], q1->log2Q[k]));
      row.emplace_back(q1->masked[k] ? "1" : "0");
    }
    write_row(csv, row);
  }
  csv.close();

  QuotientSummary s;
  s.samples = q2.size();
  s.median_log2_II = q2.median_log2();
  s.mask_rate_II = q2.mask_rate();
  s.masked_II = q2.masked_count();
  if (q1) {
    s.has_Q_I = true;
    s.median_log2_I = q1->median_log2();
    s.mask_rate_I = q1->mask_rate();
    s.masked_I = q1->masked_count();
  }

  out << "gdr quotient: " << system_name(cfg) << ", scheme " << to_string(cfg.scheme.variant) << ", h " << h
      << ", " << s.samples << " samples\n";
  out << "  Q_II: median log2 = " << s.median_log2_II << ", masked " << s.masked_II << " (" << 100.0 * s.mask_rate_II
      << "%)\n";
  if (s.has_Q_I) {
    out << "  Q_I:  median log2 = " << s.median_log2_I << ", masked " << s.masked_I << " (" << 100.0 * s.mask_rate_I
        << "%)\n";
  }

  json summary{{"system", system_name(cfg)},
               {"scheme", std::string(to_string(cfg.scheme.variant))},
               {"h", h},
               {"samples", s.samples},
               {"median_log2_Q_II", s.median_log2_II},
               {"masked_Q_II", s.masked_II},
               {"mask_rate_Q_II", s.mask_rate_II}};
  if (s.has_Q_I) {
    summary["median_log2_Q_I"] = s.median_log2_I;
    summary["masked_Q_I"] = s.masked_I;
    summary["mask_rate_Q_I"] = s.mask_rate_I;
  }
  std::ofstream js = open_output(cfg.output + ".summary.json");
  js << summary.dump(2) << '\n';
  return s;
}

std::vector<CompareRow> run_compare(const RunConfig& cfg, std::ostream& out) {
  const BuiltSystem built = build_system(cfg);
  const SystemModel& sys = *built.system;

  std::vector<SchemeVariant> variants{SchemeVariant::Midpoint, SchemeVariant::Average, SchemeVariant::Gonzalez,
                                      SchemeVariant::NewConservative};
  if (sys.symmetry() != nullptr) variants.push_back(SchemeVariant::GEquivariant);

  std::vector<CompareRow> rows(variants.size());
  const int count = static_cast<int>(variants.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < count; ++k) {
    CompareRow& row = rows[k];
    row.variant = variants[k];
    ForceScheme scheme = cfg.scheme;
    scheme.variant = variants[k];
    try {
      scheme.validate(sys);
    } catch (const std::exception& e) {
      row.status = "skipped";
      row.message = e.what();
      continue;
    }
    try {
      DriftTracker tracker(sys, built.load_end);
      integrate(sys, scheme, cfg.solver, built.initial, built.initial.t + cfg.duration,
                [&](std::size_t index, const StepReport& rep) { tracker.observe(index, rep); });
      row.status = "ok";
      row.max_energy_drift = tracker.sum.max_energy_drift;
      row.max_l_drift = tracker.sum.max_l_drift;
      row.max_j_drift = tracker.sum.max_j_drift;
      row.mean_iters = tracker.sum.mean_iters;
    } catch (const std::exception& e) {
      row.status = "failed";
      row.message = e.what();
    }
  }

  std::ofstream csv = open_output(cfg.output);
  write_row(csv, {"variant", "status", "max_energy_drift", "max_l_drift", "max_j_drift", "mean_newton_iters"});
  const bool ambient = sys.ambient_particles();
  out << "gdr compare: " << system_name(cfg) << ", dt " << cfg.solver.dt << ", duration " << cfg.duration << " s\n";
  for (const CompareRow& r : rows) {
    const bool ok = r.status == "ok";
    write_row(csv, {std::string(to_string(r.variant)), r.status, ok ? fmt(r.max_energy_drift) : "",
                    ok && ambient ? fmt(r.max_l_drift) : "", ok && ambient ? fmt(r.max_j_drift) : "",
                    ok ? fmt(r.mean_iters) : ""});
    out << "  " << to_string(r.variant) << ": ";
    if (ok) {
      out << "energy drift " << fmt_short(r.max_energy_drift);
      if (ambient) out << ", l drift " << fmt_short(r.max_l_drift) << ", j drift " << fmt_short(r.max_j_drift);
      out << ", mean iters " << r.mean_iters << "\n";
    } else {
      out << r.status << " (" << r.message << ")\n";
    }
  }
  json summary = json::array();
  for (const CompareRow& r : rows) {
    json e{{"variant", std::string(to_string(r.variant))}, {"status", r.status}};
    if (r.status == "ok") {
      e["max_energy_drift"] = r.max_energy_drift;
      e["mean_newton_iters"] = r.mean_iters;
      if (ambient) {
        e["max_l_drift"] = r.max_l_drift;
        e["max_j_drift"] = r.max_j_drift;
      }
    } else {
      e["message"] = r.message;
    }
    summary.push_back(e);
  }
  std::ofstream js = open_output(cfg.output + ".summary.json");
  js << summary.dump(2) << '\n';
  return rows;
}

}  // namespace gdr
