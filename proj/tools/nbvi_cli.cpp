// Command-line front end: parse a config, dispatch one subcommand, write
// text artifacts into the output directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nbvi/config.hpp"
#include "nbvi/full_model.hpp"

namespace fs = std::filesystem;
using namespace nbvi;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedRegime:
    case ErrorCode::NonMonotone:
      return 4;
    default:
      return 2;  // config and setup failures
  }
}

std::string stem_of(const std::string& config_path) {
  if (config_path.empty()) return "study";
  return fs::path(config_path).stem().string();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  require(os.good(), ErrorCode::BadConfig,
          "cannot write output file '" + p.string() + "'");
  return os;
}

// The single-instance verbs run the first (coarsest) sweep entry.
BeamGeometry first_geometry(const StudyConfig& cfg, RowResolution& res) {
  cfg.family.validate();
  double eps = cfg.family.eps_list.front();
  res = pick_resolution(cfg.mesh, cfg.family, eps);
  BeamGeometry g{eps, res.r_used, res.t_used, cfg.section};
  g.validate();
  return g;
}

int run_solve3d(const StudyConfig& cfg, const fs::path& out,
                const std::string& stem) {
  RowResolution res;
  BeamGeometry g = first_geometry(cfg, res);
  Mesh mesh = build_beam_mesh(g, res.n_axial, res.n_cross, cfg.mesh.notch_refine);
  FullSolution sol = solve_full(g, mesh, cfg.set, cfg.feas, cfg.solver);
  {
    auto os = open_out(out / (stem + ".solution.txt"));
    dump_solution(sol, os);
  }
  {
    auto os = open_out(out / (stem + ".flux.txt"));
    dump_flux(sol, os);
  }
  std::printf("eps=%g dofs=%d iterations=%d residual=%.3e energy=%.6g\n",
              g.eps, mesh.n_dofs, sol.stats.iterations,
              sol.stats.final_residual, scaled_energy(mesh, g, sol.nodal));
  if (!sol.stats.converged) {
    std::fprintf(stderr, "error: solver did not converge\n");
    return 3;
  }
  return 0;
}

int run_solve_limit(const StudyConfig& cfg, const fs::path& out,
                    const std::string& stem) {
  cfg.family.validate();
  Regime regime = classify_regime(cfg.family);
  LimitMeshes lm =
      build_limit_meshes(regime, cfg.mesh.h_1d, cfg.mesh.limit_n_cross,
                         cfg.mesh.n_block_axial, cfg.section);
  LimitSolution sol = solve_limit(regime, cfg.set, cfg.feas, lm, cfg.solver);
  {
    auto os = open_out(out / (stem + ".limit.txt"));
    dump_limit(sol, os);
  }
  std::printf("case=%s iterations=%d residual=%.3e u0-=%.6g u0+=%.6g\n",
              regime.case_tag == RegimeCase::CaseA ? "A" : "B",
              sol.stats.iterations, sol.stats.final_residual, u0_minus(sol),
              u0_plus(sol));
  if (!sol.stats.converged) {
    std::fprintf(stderr, "error: solver did not converge\n");
    return 3;
  }
  return 0;
}

int run_study_cmd(const StudyConfig& cfg, const fs::path& out,
                  const std::string& stem) {
  StudyReport rep = run_study(cfg);
  {
    auto os = open_out(out / (stem + ".csv"));
    write_csv(rep, os);
  }
  {
    auto os = open_out(out / (stem + ".json"));
    write_json(rep, cfg, os);
  }
  bool any_failed = false;
  for (const auto& r : rep.rows) any_failed = any_failed || r.failed;
  for (const auto& v : rep.verdicts)
    std::printf("%s %s%s%s\n", v.id.c_str(),
                v.state == Verdict::Pass
                    ? "pass"
                    : (v.state == Verdict::Fail ? "FAIL" : "inconclusive"),
                v.note.empty() ? "" : ": ", v.note.c_str());
  return any_failed ? 3 : 0;
}

int run_verify(const StudyConfig& cfg) {
  ValidationReport rep =
      validate_assumptions(cfg.set, cfg.set.constants, 10000, cfg.seed);
  auto line = [](const char* name, const ConditionReport& c) {
    std::printf("%-12s %s  worst margin %.3e  (branch %d, eta %.3g)\n", name,
                c.pass ? "pass" : "FAIL", c.worst_margin, c.branch, c.eta);
  };
  line("coercivity", rep.coercivity);
  line("growth", rep.growth);
  line("monotonicity", rep.monotonicity);
  std::printf("samples %d: %s\n", rep.samples, rep.pass ? "pass" : "FAIL");
  return rep.pass ? 0 : 1;
}

int run_mesh_dump(const StudyConfig& cfg, const fs::path& out,
                  const std::string& stem) {
  RowResolution res;
  BeamGeometry g = first_geometry(cfg, res);
  Mesh mesh = build_beam_mesh(g, res.n_axial, res.n_cross, cfg.mesh.notch_refine);
  auto os = open_out(out / (stem + ".mesh.txt"));
  dump_mesh(mesh, os);
  std::printf("nodes=%zu cells=%zu dofs=%d\n", mesh.nodes.size(),
              mesh.cells.size(), mesh.n_dofs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational-inequality laboratory for notched beams"};
  app.fallthrough();

  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> overrides;
  bool print_defaults = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory (created if missing)");
  app.add_option("--seed", seed, "sampling seed override");
  app.add_option("--threads", threads, "sweep worker threads");
  app.add_option("--set", overrides, "dotted config override key=value");
  app.add_flag("--print-defaults", print_defaults,
               "print the resolved default config and exit");

  auto* c3 = app.add_subcommand("solve3d",
                                "solve the 3-D problem at the first sweep eps");
  auto* cl = app.add_subcommand("solve-limit", "solve the limit problem");
  auto* cs = app.add_subcommand("study", "run the eps sweep and write reports");
  auto* cv = app.add_subcommand("verify-assumptions",
                                "sample the structure conditions");
  auto* cm = app.add_subcommand("mesh-dump",
                                "write the mesh of the first sweep eps");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (print_defaults) {
    std::cout << config_to_json(default_config()).dump(2) << '\n';
    return 0;
  }

  try {
    StudyConfig cfg =
        config_path.empty() ? default_config() : load_config(config_path);
    for (const auto& s : overrides) apply_override(cfg, s);
    if (app.count("--seed")) cfg.seed = seed;
    if (threads > 0) cfg.threads = threads;

    fs::path out(out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    require(!ec, ErrorCode::BadConfig,
            "cannot create output directory '" + out_dir + "'");
    std::string stem = stem_of(config_path);

    if (*c3) return run_solve3d(cfg, out, stem);
    if (*cl) return run_solve_limit(cfg, out, stem);
    if (*cs) return run_study_cmd(cfg, out, stem);
    if (*cv) return run_verify(cfg);
    if (*cm) return run_mesh_dump(cfg, out, stem);
    std::cerr << "error: no subcommand given (see --help)\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
