#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gdr/cli.hpp"

using namespace gdr;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("gdr_test_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string join_header(const std::vector<std::string>& h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) s += (i ? "," : "") + h[i];
  return s;
}

RunConfig config_with_output(const std::string& json, const std::string& name) {
  RunConfig cfg = parse_config(json);
  cfg.output = (scratch() / name).string();
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GDR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("minimal configuration takes the catalog defaults") {
  const RunConfig cfg = parse_config(R"({"system": {"type": "example1"}})");
  CHECK(cfg.command == Command::Run);
  CHECK(cfg.system.type == SystemType::Example1);
  CHECK(cfg.scheme.variant == SchemeVariant::NewConservative);
  CHECK(cfg.scheme.dissipation.chi_f == 0.0);
  CHECK(cfg.scheme.dissipation.chi_s == 0.0);
  CHECK(cfg.solver.dt == 1e-3);
  CHECK(cfg.solver.rel_tol == 1e-10);
  CHECK(cfg.duration == 50.0);
}

TEST_CASE("dissipative example 1 configuration") {
  const RunConfig cfg = parse_config(
      R"({"system": {"type": "example1"}, "scheme": {"variant": "new_conservative", "chi_f": 0.0025, "chi_s": 0.008}})");
  CHECK(cfg.scheme.dissipation.chi_f == 0.0025);
  CHECK(cfg.scheme.dissipation.chi_s == 0.008);
  CHECK(cfg.scheme.dissipation.h == cfg.solver.dt);
  CHECK(cfg.scheme.dissipation.D == make_example1().system.V2());
}

TEST_CASE("invalid configurations") {
  try {
    parse_config(R"({"system": {"type": "example1"}, "scheme": {"chi_f": -1}})");
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    CHECK(e.path() == "scheme.chi_f");
  }
  try {
    parse_config(R"({"system": {"type": "example1"}, "solver": {"dt": 0.001, "tolerance": 1}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "solver.tolerance");
  }
  CHECK_THROWS_AS(parse_config(R"({"system": {"type": "example3"}})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"system": {"type": "example1"}, "duration": 0.0105})"), SchemaError);
  CHECK_THROWS_AS(parse_config("not json"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"system": {"type": "example1"}, "scheme": {"variant": "gonzalez", "chi_f": 0.1}})"),
                  SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"system": {"type": "example1"}, "scheme": {"variant": "g_equivariant"}})"),
                  SchemaError);
  CHECK_THROWS_AS(load_config((scratch() / "missing.json").string()), SchemaError);
}

TEST_CASE("linear oscillator and explicit spring networks parse") {
  const RunConfig osc = parse_config(R"({
    "system": {"type": "linear_oscillator", "M": [[1]], "K": [[4]], "q0": [1], "s0": [0]},
    "duration": 1})");
  const BuiltSystem b = build_system(osc);
  CHECK(b.oscillator != nullptr);
  CHECK(b.initial.q == Vec{1.0});

  const RunConfig net = parse_config(R"({
    "system": {"type": "spring_network",
               "particles": [{"mass": 1, "position": [0, 0, 0]}, {"mass": 2, "position": [1, 0, 0], "velocity": [0, 1, 0]}],
               "springs": [{"i": 0, "j": 1, "stiffness": 10, "rest_length": 1}],
               "load": {"forces": [{"particle": 0, "force": [1, 0, 0]}], "pulse": [[0, 0], [0.5, 1], [1, 0]]}},
    "scheme": {"variant": "g_equivariant"},
    "duration": 2})");
  const BuiltSystem bn = build_system(net);
  CHECK(bn.system->dim() == 6);
  CHECK(bn.load_end == 1.0);
  CHECK(bn.initial.s[4] == 1.0);

  CHECK_THROWS_AS(parse_config(R"({"system": {"type": "spring_network",
      "particles": [{"position": [0, 0, 0]}], "springs": [{"i": 0, "j": 3}]}})"),
                  SchemaError);
}

TEST_CASE("simulation writes the CSV and summary") {
  RunConfig cfg = config_with_output(R"({"system": {"type": "example1"}, "duration": 2})", "ex1.csv");
  std::ostringstream out;
  const RunSummary s = run_simulation(cfg, out);
  CHECK(s.steps == 2000);
  CHECK(s.max_energy_drift <= 1e-8 * std::abs(make_example1().system.potential(make_example1().initial.q)));
  const auto rows = lines(cfg.output);
  REQUIRE(rows.size() == 2002);
  CHECK(rows.front() == join_header(csv_header(2)));
  CHECK(fs::exists(cfg.output + ".summary.json"));
  CHECK_FALSE(out.str().empty());
}

TEST_CASE("zero duration writes only the initial row") {
  RunConfig cfg = config_with_output(R"({"system": {"type": "example1"}, "duration": 0})", "zero.csv");
  std::ostringstream out;
  run_simulation(cfg, out);
  CHECK(lines(cfg.output).size() == 2);
}

TEST_CASE("loaded spring network keeps momenta after the pulse") {
  RunConfig cfg = config_with_output(R"({"system": {"type": "spring_network", "preset": "cube"},
                                         "scheme": {"variant": "g_equivariant", "chi_f": 0.01, "chi_s": 0.01}})",
                                     "cube.csv");
  std::ostringstream out;
  const RunSummary s = run_simulation(cfg, out);
  REQUIRE(s.has_momenta);
  const double scale = std::max({1.0, std::abs(s.final_l[0]), std::abs(s.final_l[1]), std::abs(s.final_l[2]),
                                 std::abs(s.final_j[0]), std::abs(s.final_j[1]), std::abs(s.final_j[2])});
  CHECK(s.max_l_drift <= 1e-10 * scale);
  CHECK(s.max_j_drift <= 1e-10 * scale);
}

TEST_CASE("runs are deterministic") {
  const std::string json = R"({"system": {"type": "spring_network", "preset": "random", "n_particles": 12, "seed": 4},
                               "duration": 1})";
  RunConfig a = config_with_output(json, "det_a.csv");
  RunConfig b = config_with_output(json, "det_b.csv");
  std::ostringstream out;
  run_simulation(a, out);
  run_simulation(b, out);
  CHECK(slurp(a.output) == slurp(b.output));
}

TEST_CASE("quotient study on example 1") {
  RunConfig cfg = config_with_output(R"({"command": "quotient", "system": {"type": "example1"}, "duration": 10})",
                                     "q_ex1.csv");
  std::ostringstream out;
  const QuotientSummary s = run_quotient(cfg, out);
  CHECK_FALSE(s.has_Q_I);
  CHECK(s.median_log2_II >= 1.8);
  CHECK(s.median_log2_II <= 2.2);
  CHECK(s.mask_rate_II < 0.1);
}

TEST_CASE("quotient study on the oscillator reports both quotients") {
  RunConfig cfg = config_with_output(R"({"command": "quotient",
      "system": {"type": "linear_oscillator", "M": [[1, 0], [0, 2]], "K": [[3, -1], [-1, 2]], "q0": [0.5, 0], "s0": [0, 0.2]}})",
                                     "q_osc.csv");
  std::ostringstream out;
  const QuotientSummary s = run_quotient(cfg, out);
  CHECK(s.has_Q_I);
  const auto rows = lines(cfg.output);
  REQUIRE_FALSE(rows.empty());
  CHECK(rows.front().find("Q_I,") != std::string::npos);
  CHECK(s.median_log2_I == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("scheme comparison on example 1") {
  RunConfig cfg = config_with_output(R"({"command": "compare", "system": {"type": "example1"},
                                         "solver": {"dt": 0.01}, "duration": 10})",
                                     "cmp.csv");
  std::ostringstream out;
  const auto rows = run_compare(cfg, out);
  double mid = 0.0, cons = 1.0, gon = 1.0;
  for (const auto& r : rows) {
    CHECK(r.status != "failed");
    if (r.variant == SchemeVariant::Midpoint) mid = r.max_energy_drift;
    if (r.variant == SchemeVariant::NewConservative) cons = r.max_energy_drift;
    if (r.variant == SchemeVariant::Gonzalez) gon = r.max_energy_drift;
  }
  const double E0 = make_example1().system.potential(make_example1().initial.q);
  CHECK(mid > 1e-6 * E0);
  CHECK(cons <= 1e-8 * E0);
  CHECK(gon <= 1e-8 * E0);
}

TEST_CASE("command line exit codes") {
  const fs::path good = write_file("good.json", R"({"system": {"type": "example1"}, "duration": 0.01})");
  const fs::path bad = write_file("bad.json", R"({"system": {"type": "example1"}, "scheme": {"chi_f": -1}})");
  const fs::path diverge = write_file(
      "diverge.json", R"({"system": {"type": "example2"}, "solver": {"dt": 0.01, "max_iters": 1}, "duration": 1})");
  const std::string out = " --output " + (scratch() / "cli.csv").string();
  CHECK(run_cli("run --config " + good.string() + out) == 0);
  CHECK(fs::exists(scratch() / "cli.csv"));
  CHECK(run_cli("run --config " + bad.string() + out) == 2);
  CHECK(run_cli("run --config " + (scratch() / "nope.json").string()) == 2);
  CHECK(run_cli("run") == 2);
  CHECK(run_cli("run --config " + diverge.string() + out) == 3);
}
