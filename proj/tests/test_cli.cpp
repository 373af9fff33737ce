#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli() {
  const char* p = std::getenv("NBVI_CLI");
  REQUIRE_MESSAGE(p != nullptr, "NBVI_CLI must point at the binary");
  return p;
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("nbvi_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct RunResult {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
  static int counter = 0;
  fs::path log = work_dir() / ("run" + std::to_string(counter++) + ".log");
  std::string cmd = cli() + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult res;
  res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  res.output = buf.str();
  return res;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Tiny deterministic study: explicit coarse resolutions and a zero source,
// so every row solves instantly.
fs::path tiny_config(const std::string& name) {
  fs::path p = work_dir() / name;
  write_file(p, R"({
  "coefficients": {"family": "saturating", "source": {"kind": "zero"}},
  "feasible_set": {"kind": "unconstrained"},
  "mesh": {"n_axial": 4, "n_cross": 4, "notch_refine": 1,
           "h_1d": 0.125, "limit_n_cross": 2, "n_block_axial": 4},
  "solver": {"omega": 1.9}
})");
  return p;
}

}  // namespace

TEST_CASE("print-defaults emits the full documented config") {
  RunResult r = run("--print-defaults");
  CHECK(r.status == 0);
  json j = json::parse(r.output);
  for (const char* sec :
       {"geometry", "coefficients", "feasible_set", "mesh", "solver", "study"})
    CHECK(j.contains(sec));
  CHECK(j["mesh"]["dof_budget"] == 60000);
  CHECK(j["solver"]["omega"] == 1.5);
  CHECK(j["geometry"]["eps_list"].size() == 4);
  CHECK(j["coefficients"]["family"] == "saturating");
}

TEST_CASE("missing config file exits 2 and names the path") {
  RunResult r = run("study --config /nonexistent/nowhere.json");
  CHECK(r.status == 2);
  CHECK(r.output.find("/nonexistent/nowhere.json") != std::string::npos);
}

TEST_CASE("unknown config keys exit 2 and are named") {
  fs::path p = work_dir() / "bogus.json";
  write_file(p, R"({"geometry": {"bogus_knob": 1}})");
  RunResult r = run("study --config " + p.string());
  CHECK(r.status == 2);
  CHECK(r.output.find("bogus_knob") != std::string::npos);
}

TEST_CASE("type errors exit 2 and name the key") {
  fs::path p = work_dir() / "badtype.json";
  write_file(p, R"({"solver": {"omega": "fast"}})");
  RunResult r = run("study --config " + p.string());
  CHECK(r.status == 2);
  CHECK(r.output.find("omega") != std::string::npos);
}

TEST_CASE("override strings must parse and name bad keys") {
  fs::path p = tiny_config("ovr.json");
  RunResult bad = run("study --config " + p.string() + " --set bogus.key=1 --out " +
                      (work_dir() / "ovr_out").string());
  CHECK(bad.status == 2);
  CHECK(bad.output.find("bogus") != std::string::npos);

  RunResult noeq = run("study --config " + p.string() + " --set omega");
  CHECK(noeq.status == 2);
}

TEST_CASE("assumption verification passes for the shipped families") {
  RunResult r = run("verify-assumptions");
  CHECK(r.status == 0);
  for (const char* cond : {"coercivity", "growth", "monotonicity"})
    CHECK(r.output.find(cond) != std::string::npos);
  CHECK(r.output.find("pass") != std::string::npos);
  CHECK(r.output.find("FAIL") == std::string::npos);
}

TEST_CASE("study writes csv and json artifacts and is idempotent") {
  fs::path cfg = tiny_config("tiny.json");
  fs::path out = work_dir() / "study_out";
  std::string args =
      "study --config " + cfg.string() + " --out " + out.string();

  RunResult r1 = run(args);
  CHECK(r1.status == 0);
  REQUIRE(fs::exists(out / "tiny.csv"));
  REQUIRE(fs::exists(out / "tiny.json"));
  std::string csv1 = read_file(out / "tiny.csv");
  std::string json1 = read_file(out / "tiny.json");

  RunResult r2 = run(args);
  CHECK(r2.status == 0);
  CHECK(read_file(out / "tiny.csv") == csv1);
  CHECK(read_file(out / "tiny.json") == json1);

  // The report echoes the resolved config, defaulted values included.
  json j = json::parse(json1);
  CHECK(j["config"]["mesh"]["n_axial"] == 4);
  CHECK(j["config"]["solver"]["omega"] == 1.9);
  CHECK(j["config"]["solver"]["tol_outer"] == 1e-8);  // defaulted
  CHECK(j["all_pass"] == true);
  CHECK(j["trivial"] == true);

  // Overrides land in the echo too.
  RunResult r3 = run(args + " --set solver.omega=1.7");
  CHECK(r3.status == 0);
  json j3 = json::parse(read_file(out / "tiny.json"));
  CHECK(j3["config"]["solver"]["omega"] == 1.7);
}

TEST_CASE("a study report is itself a valid config") {
  fs::path cfg = tiny_config("replay.json");
  fs::path out1 = work_dir() / "replay_a";
  fs::path out2 = work_dir() / "replay_b";

  RunResult r1 = run("study --config " + cfg.string() + " --out " +
                     out1.string() + " --set solver.omega=1.7");
  REQUIRE(r1.status == 0);

  // Rerunning from the report must reproduce the sweep, override included.
  RunResult r2 = run("study --config " + (out1 / "replay.json").string() +
                     " --out " + out2.string());
  CHECK(r2.status == 0);
  CHECK(read_file(out2 / "replay.csv") == read_file(out1 / "replay.csv"));
  json j2 = json::parse(read_file(out2 / "replay.json"));
  CHECK(j2["config"]["solver"]["omega"] == 1.7);
}

TEST_CASE("study rows that cannot converge exit 3") {
  fs::path cfg = tiny_config("starved.json");
  fs::path out = work_dir() / "starved_out";
  RunResult r = run("study --config " + cfg.string() +
                    " --set coefficients.source.kind=hat"
                    " --set coefficients.source.amplitude=4"
                    " --set feasible_set.kind=nonnegative"
                    " --set solver.max_iter=3 --out " +
                    out.string());
  CHECK(r.status == 3);
}

TEST_CASE("solve3d and mesh-dump write their artifacts") {
  fs::path cfg = tiny_config("one.json");
  fs::path out = work_dir() / "one_out";
  RunResult r = run("solve3d --config " + cfg.string() + " --out " + out.string());
  CHECK(r.status == 0);
  CHECK(fs::exists(out / "one.solution.txt"));
  CHECK(fs::exists(out / "one.flux.txt"));
  std::string sol = read_file(out / "one.solution.txt");
  CHECK(sol.rfind("# eps=", 0) == 0);

  RunResult m = run("mesh-dump --config " + cfg.string() + " --out " + out.string());
  CHECK(m.status == 0);
  CHECK(fs::exists(out / "one.mesh.txt"));
  std::string mesh = read_file(out / "one.mesh.txt");
  CHECK(mesh.rfind("n ", 0) == 0);
}

TEST_CASE("solve-limit writes the limit dump") {
  fs::path cfg = tiny_config("lim.json");
  fs::path out = work_dir() / "lim_out";
  RunResult r = run("solve-limit --config " + cfg.string() + " --out " + out.string());
  CHECK(r.status == 0);
  REQUIRE(fs::exists(out / "lim.limit.txt"));
  std::string text = read_file(out / "lim.limit.txt");
  CHECK(text.find("u_hat") != std::string::npos);
}

TEST_CASE("regimes outside both cases exit 4") {
  // r = eps makes nu = 1 while t = r^2 keeps mu = 1: neither case applies.
  fs::path p = work_dir() / "other.json";
  write_file(p, R"({
  "geometry": {"r_rule": {"base": "eps", "coef": 1, "power": 1},
               "t_rule": {"base": "r", "coef": 1, "power": 2}},
  "mesh": {"h_1d": 0.125, "limit_n_cross": 2, "n_block_axial": 4}
})");
  RunResult r = run("solve-limit --config " + p.string() + " --out " +
                    (work_dir() / "other_out").string());
  CHECK(r.status == 4);
}

TEST_CASE("no subcommand is a usage error") {
  RunResult r = run("");
  CHECK(r.status == 2);
}
