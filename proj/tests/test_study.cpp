#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nbvi/study.hpp"

using namespace nbvi;

namespace {

EpsFamily family_b1() {
  EpsFamily f;
  f.r_rule = {PowerRule::Base::Eps, 1.0, 2.0 / 3.0};
  f.t_rule = {PowerRule::Base::R, 1.0, 2.0};
  f.eps_list = {0.25, 0.125, 0.0625, 0.03125};
  return f;
}

// Cheap study: explicit tiny resolutions, zero source, so every row solves
// to the zero field instantly.
StudyConfig tiny_config() {
  StudyConfig cfg;
  cfg.family = family_b1();
  cfg.set = make_saturating();
  cfg.set.source.kind = SourceSpec::Kind::Zero;
  cfg.feas.kind = FeasibleSetSpec::Kind::Unconstrained;
  cfg.mesh.n_axial = 4;
  cfg.mesh.n_cross = 4;
  cfg.mesh.notch_refine = 1;
  cfg.mesh.h_1d = 1.0 / 8;
  cfg.mesh.limit_n_cross = 2;
  cfg.mesh.n_block_axial = 4;
  cfg.solver.omega = 1.9;
  return cfg;
}

struct MetricFixture {
  BeamGeometry g;
  Regime regime{0.5, 0.0, RegimeCase::CaseA};
  Mesh mesh;
  CoefficientSet set = make_identity();
  LimitMeshes lmeshes;

  MetricFixture() {
    g.eps = 0.25;
    g.r_eps = 0.5;
    g.t_eps = 0.125;  // mu = t / r^2 = 0.5
    mesh = build_beam_mesh(g, 4, 4, 1);
    lmeshes = build_limit_meshes(regime, 1.0 / 8, 2, 4);
  }

  FullSolution zero_solution() const {
    CoefficientSet zero_src = set;
    zero_src.source.kind = SourceSpec::Kind::Zero;
    return solve_full(g, mesh, zero_src, FeasibleSetSpec{}, SolverOptions{});
  }

  LimitSolution zero_limit() const {
    CoefficientSet zero_src = set;
    zero_src.source.kind = SourceSpec::Kind::Zero;
    return solve_limit(regime, zero_src, FeasibleSetSpec{}, lmeshes);
  }
};

}  // namespace

TEST_CASE("automatic resolution snaps r to the grid and keeps mu") {
  MeshControls mc;  // defaults: automatic n_cross, 60k budget
  EpsFamily fam = family_b1();

  struct Pin {
    double eps;
    int n_cross, m;
    double r_used;
  };
  // r(eps) = eps^(2/3); the scan favors the smallest grid that hits the
  // snapped ratio best, so 0.125 lands exactly on 2/8.
  const Pin pins[] = {
      {0.25, 10, 4, 0.4},
      {0.125, 8, 2, 0.25},
      {0.0625, 19, 3, 3.0 / 19.0},
      {0.03125, 20, 2, 0.1},
  };
  for (const Pin& p : pins) {
    RowResolution rr = pick_resolution(mc, fam, p.eps);
    CAPTURE(p.eps);
    CHECK(rr.n_axial == 64);
    CHECK(rr.n_cross == p.n_cross);
    CHECK(rr.m == p.m);
    CHECK(rr.r_used == doctest::Approx(p.r_used).epsilon(1e-15));
    // t is recomputed from the exact ratio t/r^2 = 1, preserving mu.
    CHECK(rr.t_used == doctest::Approx(rr.r_used * rr.r_used).epsilon(1e-15));
  }
}

TEST_CASE("explicit cross resolution still snaps to matching parity") {
  MeshControls mc;
  mc.n_cross = 4;
  RowResolution rr = pick_resolution(mc, family_b1(), 0.25);
  CHECK(rr.n_cross == 4);
  CHECK(rr.m == 2);  // round(0.397 * 4) = 2, parity matches n even
  CHECK(rr.r_used == doctest::Approx(0.5));
  CHECK(rr.t_used == doctest::Approx(0.25));
}

TEST_CASE("resolutions over the dof budget are rejected") {
  MeshControls mc;
  mc.n_cross = 80;  // 64 * 81^2 dofs blows the 60k budget
  try {
    pick_resolution(mc, family_b1(), 0.25);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooLarge);
  }
}

TEST_CASE("metrics vanish on the zero solution pair") {
  MetricFixture fx;
  FullSolution sol = fx.zero_solution();
  LimitSolution lim = fx.zero_limit();
  REQUIRE(sol.stats.converged);
  REQUIRE(lim.stats.converged);

  CHECK(scaled_energy(fx.mesh, fx.g, sol.nodal) == 0.0);
  CHECK(scaled_l2_error(sol, lim) == 0.0);
  CHECK(zframe_error(sol, lim, fx.regime, fx.regime.mu + 1.0) == 0.0);
  CHECK(sigma0_norm(sol, fx.set, fx.regime) == 0.0);
  CHECK(flux_consistency(sol, lim, fx.set) == 0.0);
}

TEST_CASE("scaled l2 error against a zero reference is the mean square") {
  MetricFixture fx;
  FullSolution sol = fx.zero_solution();
  for (size_t i = 0; i < fx.mesh.nodes.size(); ++i)
    sol.nodal[(int)i] = fx.mesh.nodes[i][0];

  // (1/|Omega|) int x1^2 over the notched beam, closed form.
  double e = fx.g.eps, r = fx.g.r_eps, t = fx.g.t_eps;
  double vol = 2.0 * e * e * (1.0 - t) + 2.0 * (e * r) * (e * r) * t;
  double ix2 = 2.0 * e * e * (1.0 - t * t * t) / 3.0 +
               2.0 * (e * r) * (e * r) * t * t * t / 3.0;
  double expect = ix2 / vol;

  auto zero_ref = [](double, int) { return 0.0; };
  CHECK(scaled_l2_error_vs(sol, zero_ref) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("sigma0 norm of a linear axial field has a closed form") {
  MetricFixture fx;
  FullSolution sol = fx.zero_solution();
  for (size_t i = 0; i < fx.mesh.nodes.size(); ++i)
    sol.nodal[(int)i] = fx.mesh.nodes[i][0];

  // g = ((t/mu) d1 U, 0, 0) is constant over the notch and the pulled-back
  // measure satisfies J0 * |notch| = 2 mu |S|, so the norm is
  // (t/mu) * sqrt(2 mu) for the identity family.
  double t = fx.g.t_eps, mu = fx.regime.mu;
  double expect = (t / mu) * std::sqrt(2.0 * mu);
  CHECK(sigma0_norm(sol, fx.set, fx.regime) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("case A metrics reject other regimes and plain beams") {
  MetricFixture fx;
  FullSolution sol = fx.zero_solution();
  LimitSolution lim = fx.zero_limit();

  Regime b{std::numeric_limits<double>::infinity(), 0.5, RegimeCase::CaseB};
  try {
    (void)zframe_error(sol, lim, b, 1.0);
    FAIL("expected UnsupportedRegime");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedRegime);
  }
  try {
    (void)sigma0_norm(sol, fx.set, b);
    FAIL("expected UnsupportedRegime");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedRegime);
  }
}

TEST_CASE("a sweep needs at least two epsilon entries") {
  StudyConfig cfg = tiny_config();
  cfg.family.eps_list = {0.25};
  try {
    run_study(cfg);
    FAIL("expected SweepTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SweepTooShort);
  }
}

TEST_CASE("zero source study is flagged trivial and passes vacuously") {
  StudyConfig cfg = tiny_config();
  StudyReport rep = run_study(cfg);

  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.regime.case_tag == RegimeCase::CaseA);
  CHECK(rep.regime.mu == doctest::Approx(1.0));
  for (const StudyRow& r : rep.rows) {
    CHECK(!r.failed);
    CHECK(r.stats.converged);
    CHECK(r.scaled_energy <= cfg.tol.trivial_eps);
    CHECK(r.e_main <= cfg.tol.trivial_eps);
    CHECK(r.n_dofs <= cfg.mesh.dof_budget);
  }
  CHECK(rep.trivial);
  REQUIRE(rep.verdicts.size() == 5);  // Case A carries V1..V5
  for (const VerdictEntry& v : rep.verdicts) {
    CHECK(v.state == Verdict::Pass);
    CHECK(v.note == "trivial");
  }
  CHECK(rep.all_pass());
}

TEST_CASE("rows that fail to converge make every verdict inconclusive") {
  StudyConfig cfg = tiny_config();
  cfg.set.source.kind = SourceSpec::Kind::Hat;
  cfg.set.source.amplitude = 4.0;
  cfg.feas.kind = FeasibleSetSpec::Kind::Nonnegative;
  cfg.solver.max_iter = 3;  // starves the inner solver
  StudyReport rep = run_study(cfg);

  bool any_failed = false;
  for (const StudyRow& r : rep.rows) any_failed = any_failed || r.failed;
  CHECK(any_failed);
  CHECK(!rep.trivial);
  for (const VerdictEntry& v : rep.verdicts) {
    CHECK(v.state == Verdict::Inconclusive);
    CHECK(v.note == "a sweep row failed");
  }
  CHECK(!rep.all_pass());
}

TEST_CASE("report writers are deterministic and carry the config") {
  StudyConfig cfg = tiny_config();
  StudyReport rep = run_study(cfg);

  std::ostringstream c1, c2, j1, j2;
  write_csv(rep, c1);
  write_csv(rep, c2);
  write_json(rep, cfg, j1);
  write_json(rep, cfg, j2);
  const std::string csv = c1.str();
  CHECK(csv == c2.str());
  CHECK(j1.str() == j2.str());

  const std::string header =
      "eps,r_used,t_used,n_axial,n_cross,n_dofs,scaled_energy,e_main,"
      "e_zframe,sigma0_norm,flux_consistency,iterations,final_residual,"
      "converged,failed,error\n";
  CHECK(csv.rfind(header, 0) == 0);
  // Header plus one line per row.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

  nlohmann::json j = nlohmann::json::parse(j1.str());
  CHECK(j["regime"]["case"] == "A");
  CHECK(j["rows"].size() == 4);
  CHECK(j["trivial"] == true);
  CHECK(j["all_pass"] == true);
  CHECK(j["verdicts"].size() == 5);
  CHECK(j["config"]["geometry"]["eps_list"].size() == 4);
  CHECK(j["config"]["mesh"]["n_axial"] == 4);
  CHECK(j["limit"].contains("u0_minus"));
}

TEST_CASE("multi threaded study matches single threaded bit for bit") {
  StudyConfig cfg = tiny_config();
  cfg.set.source.kind = SourceSpec::Kind::Hat;
  cfg.set.source.amplitude = 4.0;
  cfg.feas.kind = FeasibleSetSpec::Kind::Nonnegative;

  StudyReport a = run_study(cfg);
  cfg.threads = 3;
  StudyReport b = run_study(cfg);

  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].scaled_energy == b.rows[k].scaled_energy);
    CHECK(a.rows[k].e_main == b.rows[k].e_main);
    CHECK(a.rows[k].e_zframe == b.rows[k].e_zframe);
    CHECK(a.rows[k].sigma0_norm == b.rows[k].sigma0_norm);
    CHECK(a.rows[k].flux_consistency == b.rows[k].flux_consistency);
    CHECK(a.rows[k].stats.iterations == b.rows[k].stats.iterations);
  }
}
