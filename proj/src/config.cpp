#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gdr/cli.hpp"

namespace gdr {

using json = nlohmann::json;

SchemaError::SchemaError(std::string path, const std::string& message)
    : std::invalid_argument(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Run: return "run";
    case Command::Quotient: return "quotient";
    case Command::Compare: return "compare";
  }
  return "unknown";
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      throw SchemaError(join(path, it.key()), "unknown key");
    }
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  return obj.contains(key) ? number(obj.at(key), join(path, key)) : fallback;
}

std::string string_at(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

std::size_t index_at(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw SchemaError(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

Vec vector_at(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = number(j[i], index_path(path, i));
  return v;
}

Vec3 vec3_at(const json& j, const std::string& path) {
  const Vec v = vector_at(j, path);
  if (v.size() != 3) throw SchemaError(path, "expected 3 components");
  return {v[0], v[1], v[2]};
}

SymMat symmat_at(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a square matrix");
  const std::size_t n = j.size();
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec row = vector_at(j[i], index_path(path, i));
    if (row.size() != n) throw SchemaError(index_path(path, i), "matrix is not square");
    for (std::size_t k = 0; k < n; ++k) m(i, k) = row[k];
  }
  try {
    return SymMat(m);
  } catch (const LinalgError& e) {
    throw SchemaError(path, e.what());
  }
}

std::vector<std::pair<double, double>> pulse_at(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected a list of [t, f] breakpoints");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vec bp = vector_at(j[i], index_path(path, i));
    if (bp.size() != 2) throw SchemaError(index_path(path, i), "breakpoint must be [t, f]");
    if (!out.empty() && !(bp[0] > out.back().first)) {
      throw SchemaError(index_path(path, i), "breakpoint times must be strictly increasing");
    }
    out.emplace_back(bp[0], bp[1]);
  }
  return out;
}

KernelMode kernel_at(const json& j, const std::string& path) {
  const std::string s = string_at(j, path);
  if (s == "serial") return KernelMode::Serial;
  if (s == "parallel") return KernelMode::Parallel;
  throw SchemaError(path, "expected 'serial' or 'parallel'");
}

struct SystemDefaults {
  double dt;
  double duration;
};

SystemDefaults parse_system(const json& j, const std::string& path, SystemSpec& spec) {
  require_object(j, path);
  if (!j.contains("type")) throw SchemaError(join(path, "type"), "missing");
  const std::string type = string_at(j.at("type"), join(path, "type"));

  if (type == "example1" || type == "example2") {
    allow_keys(j, path, {"type"});
    spec.type = type == "example1" ? SystemType::Example1 : SystemType::Example2;
    return type == "example1" ? SystemDefaults{1e-3, 50.0} : SystemDefaults{1e-4, 50.0};
  }

  if (type == "linear_oscillator") {
    allow_keys(j, path, {"type", "M", "K", "q0", "s0"});
    spec.type = SystemType::LinearOscillator;
    for (const char* key : {"M", "K", "q0"}) {
      if (!j.contains(key)) throw SchemaError(join(path, key), "missing");
    }
    spec.M = symmat_at(j.at("M"), join(path, "M"));
    spec.K = symmat_at(j.at("K"), join(path, "K"));
    spec.q0 = vector_at(j.at("q0"), join(path, "q0"));
    spec.s0 = j.contains("s0") ? vector_at(j.at("s0"), join(path, "s0")) : Vec(spec.q0.size());
    const std::size_t n = spec.M.dim();
    if (spec.K.dim() != n) throw SchemaError(join(path, "K"), "dimension differs from M");
    if (spec.q0.size() != n) throw SchemaError(join(path, "q0"), "dimension differs from M");
    if (spec.s0.size() != n) throw SchemaError(join(path, "s0"), "dimension differs from M");
    if (!spec.M.is_spd()) throw RangeError(join(path, "M"), "must be symmetric positive definite");
    if (!spec.K.is_spd()) throw RangeError(join(path, "K"), "must be symmetric positive definite");
    return {1e-2, 10.0};
  }

  if (type == "spring_network") {
    allow_keys(j, path,
               {"type", "preset", "n_particles", "mass", "stiffness", "seed", "particles", "springs", "load", "pulse",
                "kernel"});
    spec.type = SystemType::SpringNetwork;
    SpringNetworkSpec& net = spec.network;
    if (j.contains("kernel")) net.kernel = kernel_at(j.at("kernel"), join(path, "kernel"));

    if (j.contains("preset")) {
      for (const char* key : {"particles", "springs", "load"}) {
        if (j.contains(key)) throw SchemaError(join(path, key), "not allowed together with a preset");
      }
      const std::string name = string_at(j.at("preset"), join(path, "preset"));
      const auto topo = parse_spring_topology(name);
      if (!topo) throw SchemaError(join(path, "preset"), "unknown topology '" + name + "'");
      SpringDemoOptions opts;
      opts.topology = *topo;
      opts.mode = net.kernel;
      if (j.contains("n_particles")) opts.n_particles = index_at(j.at("n_particles"), join(path, "n_particles"));
      opts.mass = number_or(j, "mass", path, opts.mass);
      opts.stiffness = number_or(j, "stiffness", path, opts.stiffness);
      if (j.contains("seed")) opts.seed = index_at(j.at("seed"), join(path, "seed"));
      if (j.contains("pulse")) opts.pulse = pulse_at(j.at("pulse"), join(path, "pulse"));
      if (!(opts.mass > 0.0)) throw RangeError(join(path, "mass"), "must be positive");
      if (!(opts.stiffness >= 0.0)) throw RangeError(join(path, "stiffness"), "must be non-negative");
      net.preset = opts;
      const double load_end = opts.pulse.empty() ? 0.0 : opts.pulse.back().first;
      return {0.01, std::max(5.0, load_end + 4.0)};
    }

    for (const char* key : {"n_particles", "mass", "stiffness", "seed", "pulse"}) {
      if (j.contains(key)) throw SchemaError(join(path, key), "only allowed together with a preset");
    }
    if (!j.contains("particles")) throw SchemaError(join(path, "particles"), "missing");
    const json& parts = j.at("particles");
    const std::string ppath = join(path, "particles");
    if (!parts.is_array() || parts.empty()) throw SchemaError(ppath, "expected a non-empty array");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const std::string p = index_path(ppath, i);
      allow_keys(parts[i], p, {"mass", "position", "velocity"});
      ParticleSpec ps;
      ps.mass = number_or(parts[i], "mass", p, 1.0);
      if (!(ps.mass > 0.0)) throw RangeError(join(p, "mass"), "must be positive");
      if (!parts[i].contains("position")) throw SchemaError(join(p, "position"), "missing");
      ps.position = vec3_at(parts[i].at("position"), join(p, "position"));
      if (parts[i].contains("velocity")) ps.velocity = vec3_at(parts[i].at("velocity"), join(p, "velocity"));
      net.particles.push_back(ps);
    }

    if (j.contains("springs")) {
      const json& springs = j.at("springs");
      const std::string spath = join(path, "springs");
      if (!springs.is_array()) throw SchemaError(spath, "expected an array");
      for (std::size_t e = 0; e < springs.size(); ++e) {
        const std::string p = index_path(spath, e);
        allow_keys(springs[e], p, {"i", "j", "stiffness", "rest_length"});
        for (const char* key : {"i", "j"}) {
          if (!springs[e].contains(key)) throw SchemaError(join(p, key), "missing");
        }
        Spring sp;
        sp.i = index_at(springs[e].at("i"), join(p, "i"));
        sp.j = index_at(springs[e].at("j"), join(p, "j"));
        if (sp.i >= net.particles.size() || sp.j >= net.particles.size() || sp.i == sp.j) {
          throw SchemaError(p, "spring references a missing particle or joins a particle to itself");
        }
        sp.stiffness = number_or(springs[e], "stiffness", p, 1.0);
        if (!(sp.stiffness >= 0.0)) throw RangeError(join(p, "stiffness"), "must be non-negative");
        if (springs[e].contains("rest_length")) {
          sp.rest_length = number(springs[e].at("rest_length"), join(p, "rest_length"));
        } else {
          const Vec3& a = net.particles[sp.i].position;
          const Vec3& b = net.particles[sp.j].position;
          double d2 = 0.0;
          for (std::size_t c = 0; c < 3; ++c) d2 += (a[c] - b[c]) * (a[c] - b[c]);
          sp.rest_length = std::sqrt(d2);
        }
        if (!(sp.rest_length >= 0.0)) throw RangeError(join(p, "rest_length"), "must be non-negative");
        net.springs.push_back(sp);
      }
    }

    double load_end = 0.0;
    if (j.contains("load")) {
      const json& load = j.at("load");
      const std::string lpath = join(path, "load");
      allow_keys(load, lpath, {"forces", "pulse"});
      if (!load.contains("pulse")) throw SchemaError(join(lpath, "pulse"), "missing");
      net.pulse = pulse_at(load.at("pulse"), join(lpath, "pulse"));
      if (load.contains("forces")) {
        const json& forces = load.at("forces");
        const std::string fpath = join(lpath, "forces");
        if (!forces.is_array()) throw SchemaError(fpath, "expected an array");
        for (std::size_t k = 0; k < forces.size(); ++k) {
          const std::string p = index_path(fpath, k);
          allow_keys(forces[k], p, {"particle", "force"});
          if (!forces[k].contains("particle")) throw SchemaError(join(p, "particle"), "missing");
          if (!forces[k].contains("force")) throw SchemaError(join(p, "force"), "missing");
          PointLoad pl;
          pl.particle = index_at(forces[k].at("particle"), join(p, "particle"));
          if (pl.particle >= net.particles.size()) throw SchemaError(join(p, "particle"), "no such particle");
          pl.force = vec3_at(forces[k].at("force"), join(p, "force"));
          net.loads.push_back(pl);
        }
      }
      if (!net.pulse.empty()) load_end = net.pulse.back().first;
    }
    return {0.01, std::max(5.0, load_end + 4.0)};
  }

  throw SchemaError(join(path, "type"), "unknown system type '" + type + "'");
}

void parse_scheme(const json& j, const std::string& path, const SystemSpec& sys, ForceScheme& scheme) {
  allow_keys(j, path, {"variant", "chi_f", "chi_s", "dissipation_matrix", "degeneracy"});
  if (j.contains("variant")) {
    const std::string name = string_at(j.at("variant"), join(path, "variant"));
    const auto v = parse_scheme_variant(name);
    if (!v) throw SchemaError(join(path, "variant"), "unknown scheme variant '" + name + "'");
    scheme.variant = *v;
  }
  DissipationConfig& d = scheme.dissipation;
  d.chi_f = number_or(j, "chi_f", path, 0.0);
  d.chi_s = number_or(j, "chi_s", path, 0.0);
  if (d.chi_f < 0.0) throw RangeError(join(path, "chi_f"), "must be non-negative");
  if (d.chi_s < 0.0) throw RangeError(join(path, "chi_s"), "must be non-negative");

  const bool example = sys.type == SystemType::Example1 || sys.type == SystemType::Example2;
  if (j.contains("dissipation_matrix")) {
    const json& m = j.at("dissipation_matrix");
    const std::string mpath = join(path, "dissipation_matrix");
    if (m.is_string()) {
      const std::string name = m.get<std::string>();
      if (name == "identity") {
        d.D = SymMat();
      } else if (name == "V2" && example) {
        d.D = sys.type == SystemType::Example1 ? make_example1().dissipation.D : make_example2().dissipation.D;
      } else {
        throw SchemaError(mpath, "expected a matrix, 'identity', or 'V2' for the example systems");
      }
    } else {
      d.D = symmat_at(m, mpath);
    }
  } else if (example) {
    d.D = sys.type == SystemType::Example1 ? make_example1().dissipation.D : make_example2().dissipation.D;
  }

  if (j.contains("degeneracy")) {
    const json& g = j.at("degeneracy");
    const std::string gpath = join(path, "degeneracy");
    allow_keys(g, gpath, {"mode", "rel_threshold"});
    if (g.contains("mode")) {
      const std::string mode = string_at(g.at("mode"), join(gpath, "mode"));
      if (mode == "fallback") {
        scheme.policy.mode = DegeneracyMode::Fallback;
      } else if (mode == "strict") {
        scheme.policy.mode = DegeneracyMode::Strict;
      } else {
        throw SchemaError(join(gpath, "mode"), "expected 'fallback' or 'strict'");
      }
    }
    scheme.policy.rel_threshold = number_or(g, "rel_threshold", gpath, scheme.policy.rel_threshold);
    if (!(scheme.policy.rel_threshold > 0.0)) throw RangeError(join(gpath, "rel_threshold"), "must be positive");
  }
}

void parse_solver(const json& j, const std::string& path, SolverConfig& solver) {
  allow_keys(j, path, {"dt", "rel_tol", "max_iters", "jacobian"});
  solver.dt = number_or(j, "dt", path, solver.dt);
  solver.rel_tol = number_or(j, "rel_tol", path, solver.rel_tol);
  if (j.contains("max_iters")) {
    const json& m = j.at("max_iters");
    if (!m.is_number_integer()) throw SchemaError(join(path, "max_iters"), "expected an integer");
    solver.max_iters = m.get<int>();
  }
  if (j.contains("jacobian")) {
    const std::string s = string_at(j.at("jacobian"), join(path, "jacobian"));
    if (s == "finite_difference") {
      solver.jacobian = JacobianMode::FiniteDifference;
    } else if (s == "analytic_if_available") {
      solver.jacobian = JacobianMode::AnalyticIfAvailable;
    } else {
      throw SchemaError(join(path, "jacobian"), "expected 'finite_difference' or 'analytic_if_available'");
    }
  }
  if (!(solver.dt > 0.0)) throw RangeError(join(path, "dt"), "must be positive");
  if (!(solver.rel_tol > 0.0)) throw RangeError(join(path, "rel_tol"), "must be positive");
  if (solver.max_iters < 1) throw RangeError(join(path, "max_iters"), "must be at least 1");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("malformed document: ") + e.what());
  }
  allow_keys(root, "", {"command", "system", "scheme", "solver", "duration", "output", "quotient"});

  RunConfig cfg;
  if (root.contains("command")) {
    const std::string c = string_at(root.at("command"), "command");
    if (c == "run") {
      cfg.command = Command::Run;
    } else if (c == "quotient") {
      cfg.command = Command::Quotient;
    } else if (c == "compare") {
      cfg.command = Command::Compare;
    } else {
      throw SchemaError("command", "expected 'run', 'quotient' or 'compare'");
    }
  }

  if (!root.contains("system")) throw SchemaError("system", "missing");
  const SystemDefaults defaults = parse_system(root.at("system"), "system", cfg.system);
  cfg.solver.dt = defaults.dt;
  cfg.duration = defaults.duration;

  if (root.contains("scheme")) parse_scheme(root.at("scheme"), "scheme", cfg.system, cfg.scheme);
  else parse_scheme(json::object(), "scheme", cfg.system, cfg.scheme);
  if (root.contains("solver")) parse_solver(root.at("solver"), "solver", cfg.solver);
  cfg.scheme.dissipation.h = cfg.solver.dt;

  if (root.contains("duration")) cfg.duration = number(root.at("duration"), "duration");
  if (!(cfg.duration >= 0.0)) throw RangeError("duration", "must be non-negative");
  try {
    step_count(0.0, cfg.duration, cfg.solver.dt);
  } catch (const std::invalid_argument&) {
    throw SchemaError("duration", "must be an integer multiple of solver.dt");
  }

  if (root.contains("output")) cfg.output = string_at(root.at("output"), "output");
  if (root.contains("quotient")) {
    const json& q = root.at("quotient");
    allow_keys(q, "quotient", {"sample_every"});
    cfg.quotient.sample_every = number_or(q, "sample_every", "quotient", 0.0);
    if (cfg.quotient.sample_every < 0.0) throw RangeError("quotient.sample_every", "must be non-negative");
  }

  try {
    const BuiltSystem built = build_system(cfg);
    cfg.scheme.validate(*built.system);
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError("scheme", e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("", "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  if (cfg.system.type == SystemType::SpringNetwork && cfg.system.network.preset) {
    cfg.system.network.preset->seed = seed;
  }
}

BuiltSystem build_system(const RunConfig& cfg) {
  BuiltSystem out;
  const SystemSpec& spec = cfg.system;
  switch (spec.type) {
    case SystemType::Example1: {
      auto ex = make_example1();
      out.initial = ex.initial;
      out.system = std::make_unique<TwoMassPolynomial>(std::move(ex.system));
      break;
    }
    case SystemType::Example2: {
      auto ex = make_example2();
      out.initial = ex.initial;
      out.system = std::make_unique<TwoMassNonPolynomial>(std::move(ex.system));
      break;
    }
    case SystemType::LinearOscillator: {
      auto osc = std::make_unique<LinearOscillator>(spec.M, spec.K);
      out.oscillator = osc.get();
      out.system = std::move(osc);
      out.initial = State{spec.q0, spec.s0, 0.0};
      break;
    }
    case SystemType::SpringNetwork: {
      const SpringNetworkSpec& net = spec.network;
      if (net.preset) {
        SpringDemo demo = make_spring_demo(*net.preset);
        out.initial = demo.initial;
        out.load_end = demo.network.load().end_time();
        out.system = std::make_unique<SpringNetwork3D>(std::move(demo.network));
        break;
      }
      const std::size_t n = net.particles.size();
      std::vector<double> masses;
      Vec q(3 * n), s(3 * n);
      for (std::size_t p = 0; p < n; ++p) {
        masses.push_back(net.particles[p].mass);
        for (std::size_t c = 0; c < 3; ++c) {
          q[3 * p + c] = net.particles[p].position[c];
          s[3 * p + c] = net.particles[p].velocity[c];
        }
      }
      LoadSchedule load;
      if (!net.pulse.empty()) {
        Vec base(3 * n);
        for (const PointLoad& pl : net.loads)
          for (std::size_t c = 0; c < 3; ++c) base[3 * pl.particle + c] += pl.force[c];
        load = LoadSchedule(base, net.pulse);
        out.load_end = load.end_time();
      }
      out.system = std::make_unique<SpringNetwork3D>(masses, net.springs, load, net.kernel);
      out.initial = State{q, s, 0.0};
      break;
    }
  }
  return out;
}

}  // namespace gdr
