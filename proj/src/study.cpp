#include "nbvi/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>

#include "nbvi/config.hpp"
#include "nbvi/full_model.hpp"

namespace nbvi {

namespace {

// Closest integer to v with the parity of n, clamped to the admissible
// block sizes [parity-min, n].
int snap_block(int n, double v) {
  long m0 = std::lround(v);
  if ((m0 - n) % 2 != 0) {
    // Two parity-correct neighbours; take the closer one, ties downward.
    m0 = (v - (double)(m0 - 1) <= (double)(m0 + 1) - v) ? m0 - 1 : m0 + 1;
  }
  long lo = (n % 2 == 0) ? 2 : 1;
  return (int)std::clamp(m0, lo, (long)n);
}

int notch_axial_cells(double t, int n_axial, int notch_refine) {
  double h_out = (1.0 - t) / (n_axial / 2);
  return notch_refine * (int)std::max(1L, std::lround(2.0 * t / h_out));
}

// Mirrors the mesh node layout: every non-base full plane carries the whole
// cross grid, notch-interior planes carry only the block.
long estimate_dofs(double t, double r, int n_axial, int n_cross, int m,
                   int notch_refine) {
  long full = (long)(n_cross + 1) * (n_cross + 1);
  if (t <= 0.0 || r >= 1.0) return (long)(n_axial - 1) * full;
  long blk = (long)(m + 1) * (m + 1);
  long n_notch = notch_axial_cells(t, n_axial, notch_refine);
  return (long)n_axial * full + (n_notch - 1) * blk;
}

double trilinear(const Mesh& mesh, int cell, const Eigen::VectorXd& nodal,
                 double l1, double l2, double l3) {
  const auto& cn = mesh.cells[cell];
  double v = 0.0;
  for (int l = 0; l < 8; ++l) {
    double s = ((l & 1) ? l1 : 1.0 - l1) * ((l & 2) ? l2 : 1.0 - l2) *
               ((l & 4) ? l3 : 1.0 - l3);
    v += s * nodal[cn[l]];
  }
  return v;
}

bool slack_decreasing(const std::vector<double>& v, double slack) {
  for (size_t k = 0; k + 1 < v.size(); ++k)
    if (v[k + 1] > v[k] * (1.0 + slack)) return false;
  return true;
}

bool ratio_bounded(const std::vector<double>& v, double bound) {
  double mn = *std::min_element(v.begin(), v.end());
  double mx = *std::max_element(v.begin(), v.end());
  if (mx == 0.0) return true;
  return mn > 0.0 && mx <= bound * mn;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

nlohmann::ordered_json jnum(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

const char* case_name(RegimeCase c) {
  switch (c) {
    case RegimeCase::CaseA: return "A";
    case RegimeCase::CaseB: return "B";
    default: return "other";
  }
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    default: return "inconclusive";
  }
}

}  // namespace

RowResolution pick_resolution(const MeshControls& mesh,
                              const EpsFamily& family, double eps) {
  double r_exact = family.r_of(eps);
  double t_exact = family.t_of(eps);
  double mu = t_exact / (r_exact * r_exact);

  RowResolution res;
  // Fixed axial resolution keeps the rows comparable; the sweep metrics
  // carry signals far above the h^2 discretization floor at this spacing.
  res.n_axial = mesh.n_axial > 0 ? mesh.n_axial : 64;

  auto snapped_t = [&](double r) { return t_exact <= 0.0 ? 0.0 : mu * r * r; };

  if (mesh.n_cross > 0) {
    res.n_cross = mesh.n_cross;
    res.m = snap_block(res.n_cross, r_exact * res.n_cross);
    res.r_used = (double)res.m / res.n_cross;
    res.t_used = snapped_t(res.r_used);
    long d = estimate_dofs(res.t_used, res.r_used, res.n_axial, res.n_cross,
                           res.m, mesh.notch_refine);
    require(d <= mesh.dof_budget, ErrorCode::TooLarge,
            "requested resolution needs " + std::to_string(d) +
                " dofs, budget is " + std::to_string(mesh.dof_budget));
    return res;
  }

  double best_err = std::numeric_limits<double>::infinity();
  for (int n = 4; n <= 256; ++n) {
    int m = snap_block(n, r_exact * n);
    double r = (double)m / n;
    long d = estimate_dofs(snapped_t(r), r, res.n_axial, n, m,
                           mesh.notch_refine);
    if (d > mesh.dof_budget) continue;
    double err = std::abs(r - r_exact) / r_exact;
    if (err < best_err * (1.0 - 1e-12)) {
      best_err = err;
      res.n_cross = n;
      res.m = m;
    }
  }
  require(res.n_cross > 0, ErrorCode::TooLarge,
          "dof budget admits no cross resolution at eps = " + fmt(eps));
  res.r_used = (double)res.m / res.n_cross;
  res.t_used = snapped_t(res.r_used);
  return res;
}

double scaled_l2_error_vs(const FullSolution& sol,
                          const std::function<double(double, int)>& uref) {
  QuadPoint q[8];
  double acc = 0.0;
  for (int c = 0; c < (int)sol.mesh.cells.size(); ++c) {
    int np = cell_quadrature(sol.mesh, c, 2, q);
    for (int p = 0; p < np; ++p) {
      double u = 0.0;
      for (int a = 0; a < 8; ++a) u += q[p].N[a] * sol.nodal[sol.mesh.cells[c][a]];
      double d = u - uref(q[p].x[0], q[p].x[0] < 0.0 ? -1 : 1);
      acc += q[p].w * d * d;
    }
  }
  return acc / measure_omega(sol.geom);
}

double scaled_l2_error(const FullSolution& sol, const LimitSolution& limit) {
  double t = sol.geom.t_eps;
  return scaled_l2_error_vs(sol, [&](double x1, int side) {
    if (x1 <= -t) return eval_u(limit, x1, Side::Left);
    if (x1 >= t) return eval_u(limit, x1, Side::Right);
    // Over the notch gap the limit is extended by its junction traces.
    return side < 0 ? u0_minus(limit) : u0_plus(limit);
  });
}

double zframe_error(const FullSolution& sol, const LimitSolution& limit,
                    const Regime& regime, double R) {
  require(regime.case_tag == RegimeCase::CaseA, ErrorCode::UnsupportedRegime,
          "z-frame error is defined for the coupled regime only");
  require(R > 0.0, ErrorCode::BadConfig, "window radius must be positive");

  const Mesh& mesh = sol.mesh;
  const double R2 = R * R;
  const double g1 = 0.5 - 0.5 / std::sqrt(3.0), g2 = 1.0 - g1;
  double acc = 0.0;

  for (int c = 0; c < (int)mesh.cells.size(); ++c) {
    const auto& cn = mesh.cells[c];
    Vec3 zlo = map_z(sol.geom, regime, mesh.nodes[cn[0]]);
    Vec3 zhi = map_z(sol.geom, regime, mesh.nodes[cn[7]]);

    double near2 = 0.0, far2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      double d = zlo[i] > 0.0 ? zlo[i] : (zhi[i] < 0.0 ? -zhi[i] : 0.0);
      near2 += d * d;
      double f = std::max(std::abs(zlo[i]), std::abs(zhi[i]));
      far2 += f * f;
    }
    if (near2 >= R2) continue;

    Vec3 ext = zhi - zlo;
    if (far2 <= R2) {
      // The z-map is affine per axis on a cell, so 2x2x2 Gauss in the
      // z-box integrates the trilinear difference exactly enough.
      double wbox = ext[0] * ext[1] * ext[2] / 8.0;
      for (int i = 0; i < 8; ++i) {
        double l1 = (i & 1) ? g2 : g1;
        double l2 = (i & 2) ? g2 : g1;
        double l3 = (i & 4) ? g2 : g1;
        double z1 = zlo[0] + ext[0] * l1;
        double d = trilinear(mesh, c, sol.nodal, l1, l2, l3) -
                   eval_uhat(limit, z1);
        acc += wbox * d * d;
      }
      continue;
    }

    // Cell straddles the window boundary: cut into sub-boxes no wider than
    // R/8 per axis (capped) and sample centers against the ball.
    int ns[3];
    for (int i = 0; i < 3; ++i)
      ns[i] = std::clamp((int)std::ceil(ext[i] / (R / 8.0)), 2, 64);
    double wsub = ext[0] * ext[1] * ext[2] / ((double)ns[0] * ns[1] * ns[2]);
    for (int i = 0; i < ns[0]; ++i)
      for (int j = 0; j < ns[1]; ++j)
        for (int k = 0; k < ns[2]; ++k) {
          double l1 = (i + 0.5) / ns[0];
          double l2 = (j + 0.5) / ns[1];
          double l3 = (k + 0.5) / ns[2];
          double z1 = zlo[0] + ext[0] * l1;
          double z2 = zlo[1] + ext[1] * l2;
          double z3 = zlo[2] + ext[2] * l3;
          if (z1 * z1 + z2 * z2 + z3 * z3 > R2) continue;
          double d = trilinear(mesh, c, sol.nodal, l1, l2, l3) -
                     eval_uhat(limit, z1);
          acc += wsub * d * d;
        }
  }
  return std::sqrt(acc);
}

double sigma0_norm(const FullSolution& sol, const CoefficientSet& set,
                   const Regime& regime) {
  const BeamGeometry& g = sol.geom;
  require(regime.case_tag == RegimeCase::CaseA && g.t_eps > 0.0,
          ErrorCode::UnsupportedRegime,
          "sigma0_norm needs a finite-mu regime with a nonempty notch");

  // Pushing to the z-frame turns dx into (t / mu) (eps r)^2 dz while the
  // scaled gradient reads ((t/mu) d1 U, r^2 d2 U, r^2 d3 U).
  double s1 = g.t_eps / regime.mu;
  double s23 = g.r_eps * g.r_eps;
  double J0 = (regime.mu / g.t_eps) / (g.eps * g.r_eps * g.eps * g.r_eps);

  QuadPoint q[8];
  double acc = 0.0;
  for (int c = 0; c < (int)sol.mesh.cells.size(); ++c) {
    if (sol.mesh.cell_tag[c] != SubdomainTag::OmegaZero) continue;
    int np = cell_quadrature(sol.mesh, c, 2, q);
    for (int p = 0; p < np; ++p) {
      double eta = 0.0;
      Vec3 grad = Vec3::Zero();
      for (int a = 0; a < 8; ++a) {
        double va = sol.nodal[sol.mesh.cells[c][a]];
        eta += q[p].N[a] * va;
        grad += q[p].grad[a] * va;
      }
      Vec3 gs(s1 * grad[0], s23 * grad[1], s23 * grad[2]);
      CoefficientEval cf = eval_coeff(set, g, q[p].x, eta);
      Vec3 sig = cf.A * (cf.Phi * (cf.B * gs));
      acc += q[p].w * J0 * sig.squaredNorm();
    }
  }
  return std::sqrt(acc);
}

double flux_consistency(const FullSolution& sol, const LimitSolution& limit,
                        const CoefficientSet& set) {
  static const double stations[] = {-0.75, -0.5, -0.25, 0.25, 0.5, 0.75};
  const Mesh& mesh = sol.mesh;
  QuadPoint q[8];
  double acc = 0.0;
  int count = 0;
  for (double y : stations) {
    if (std::abs(y) <= sol.geom.t_eps) continue;
    double num = 0.0, den = 0.0;
    for (int c = 0; c < (int)mesh.cells.size(); ++c) {
      if (mesh.cell_tag[c] == SubdomainTag::OmegaZero) continue;
      double lo = mesh.nodes[mesh.cells[c][0]][0];
      double hi = mesh.nodes[mesh.cells[c][7]][0];
      if (!(lo <= y && y < hi)) continue;
      int np = cell_quadrature(mesh, c, 2, q);
      for (int p = 0; p < np; ++p) {
        num += q[p].w * sol.flux[(size_t)c * 8 + p][0];
        den += q[p].w;
      }
    }
    if (den <= 0.0) continue;
    double lim = limit_mean_flux(limit, set, y,
                                 y < 0.0 ? Side::Left : Side::Right);
    acc += std::abs(num / den - lim);
    ++count;
  }
  return count > 0 ? acc / count : 0.0;
}

StudyReport run_study(const StudyConfig& cfg) {
  cfg.family.validate();
  cfg.feas.validate();
  Regime regime = classify_regime(cfg.family);
  require(regime.case_tag != RegimeCase::Other, ErrorCode::UnsupportedRegime,
          "sweep limit matches neither the coupled nor the decoupled case");

  LimitMeshes lm =
      build_limit_meshes(regime, cfg.mesh.h_1d, cfg.mesh.limit_n_cross,
                         cfg.mesh.n_block_axial, cfg.section);
  LimitSolution limit = solve_limit(regime, cfg.set, cfg.feas, lm, cfg.solver);

  bool case_a = regime.case_tag == RegimeCase::CaseA;
  double R = cfg.ball_radius > 0.0 ? cfg.ball_radius
                                   : (case_a ? regime.mu + 1.0 : 0.0);

  StudyReport rep;
  rep.regime = regime;
  rep.u0m = u0_minus(limit);
  rep.u0p = u0_plus(limit);
  rep.rows.resize(cfg.family.eps_list.size());

  auto worker = [&](size_t k) {
    StudyRow& row = rep.rows[k];
    row.eps = cfg.family.eps_list[k];
    try {
      RowResolution res = pick_resolution(cfg.mesh, cfg.family, row.eps);
      row.r_used = res.r_used;
      row.t_used = res.t_used;
      row.n_axial = res.n_axial;
      row.n_cross = res.n_cross;
      BeamGeometry g{row.eps, res.r_used, res.t_used, cfg.section};
      g.validate();
      Mesh mesh = build_beam_mesh(g, res.n_axial, res.n_cross,
                                  cfg.mesh.notch_refine);
      row.n_dofs = mesh.n_dofs;
      FullSolution sol = solve_full(g, mesh, cfg.set, cfg.feas, cfg.solver);
      row.stats = sol.stats;
      if (!sol.stats.converged) {
        row.failed = true;
        row.error = "solver did not converge";
      }
      row.scaled_energy = scaled_energy(mesh, g, sol.nodal);
      row.e_main = scaled_l2_error(sol, limit);
      row.flux_consistency = flux_consistency(sol, limit, cfg.set);
      if (case_a) {
        row.e_zframe = zframe_error(sol, limit, regime, R);
        row.sigma0_norm = sigma0_norm(sol, cfg.set, regime);
      }
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
  };

  size_t n = rep.rows.size();
  if (cfg.threads > 1) {
    for (size_t base = 0; base < n; base += (size_t)cfg.threads) {
      std::vector<std::future<void>> batch;
      for (size_t k = base; k < std::min(n, base + (size_t)cfg.threads); ++k)
        batch.push_back(std::async(std::launch::async, worker, k));
      for (auto& f : batch) f.get();
    }
  } else {
    for (size_t k = 0; k < n; ++k) worker(k);
  }

  bool any_failed = false;
  rep.trivial = true;
  for (const auto& row : rep.rows) {
    any_failed = any_failed || row.failed;
    rep.trivial = rep.trivial && !row.failed &&
                  row.scaled_energy <= cfg.tol.trivial_eps &&
                  row.e_main <= cfg.tol.trivial_eps;
  }

  auto col = [&](double StudyRow::*f) {
    std::vector<double> v;
    for (const auto& row : rep.rows) v.push_back(row.*f);
    return v;
  };
  auto add = [&](const std::string& id, bool ok, const std::string& note) {
    VerdictEntry e;
    e.id = id;
    if (any_failed) {
      e.state = Verdict::Inconclusive;
      e.note = "a sweep row failed";
    } else if (rep.trivial) {
      e.state = Verdict::Pass;
      e.note = "trivial";
    } else {
      e.state = ok ? Verdict::Pass : Verdict::Fail;
      e.note = note;
    }
    rep.verdicts.push_back(e);
  };

  std::vector<double> energy = col(&StudyRow::scaled_energy);
  std::vector<double> emain = col(&StudyRow::e_main);
  std::vector<double> flux = col(&StudyRow::flux_consistency);
  add("V1", ratio_bounded(energy, cfg.tol.energy_ratio),
      "scaled energy max/min within bound");
  add("V2",
      slack_decreasing(emain, cfg.tol.slack) &&
          emain.back() < cfg.tol.final_ratio * emain.front(),
      "main error decreasing and final/initial below ratio");
  if (case_a) {
    add("V3", slack_decreasing(col(&StudyRow::e_zframe), cfg.tol.slack),
        "z-frame error decreasing");
    add("V4", ratio_bounded(col(&StudyRow::sigma0_norm), cfg.tol.sigma0_ratio),
        "notch flux norm max/min within bound");
  }
  add("V5", slack_decreasing(flux, cfg.tol.slack),
      "flux consistency decreasing");
  return rep;
}

bool StudyReport::all_pass() const {
  for (const auto& v : verdicts)
    if (v.state != Verdict::Pass) return false;
  return !verdicts.empty();
}

void write_csv(const StudyReport& rep, std::ostream& os) {
  os << "eps,r_used,t_used,n_axial,n_cross,n_dofs,scaled_energy,e_main,"
        "e_zframe,sigma0_norm,flux_consistency,iterations,final_residual,"
        "converged,failed,error\n";
  for (const auto& r : rep.rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    os << fmt(r.eps) << ',' << fmt(r.r_used) << ',' << fmt(r.t_used) << ','
       << r.n_axial << ',' << r.n_cross << ',' << r.n_dofs << ','
       << fmt(r.scaled_energy) << ',' << fmt(r.e_main) << ','
       << fmt(r.e_zframe) << ',' << fmt(r.sigma0_norm) << ','
       << fmt(r.flux_consistency) << ',' << r.stats.iterations << ','
       << fmt(r.stats.final_residual) << ',' << (r.stats.converged ? 1 : 0)
       << ',' << (r.failed ? 1 : 0) << ',' << err << '\n';
  }
}

void write_json(const StudyReport& rep, const StudyConfig& cfg,
                std::ostream& os) {
  using json = nlohmann::ordered_json;
  json j;
  j["config"] = config_to_json(cfg);
  j["regime"] = {{"mu", jnum(rep.regime.mu)},
                 {"nu", jnum(rep.regime.nu)},
                 {"case", case_name(rep.regime.case_tag)}};
  j["limit"] = {{"u0_minus", rep.u0m}, {"u0_plus", rep.u0p}};

  j["rows"] = json::array();
  for (const auto& r : rep.rows) {
    j["rows"].push_back({{"eps", r.eps},
                         {"r_used", r.r_used},
                         {"t_used", r.t_used},
                         {"n_axial", r.n_axial},
                         {"n_cross", r.n_cross},
                         {"n_dofs", r.n_dofs},
                         {"scaled_energy", r.scaled_energy},
                         {"e_main", r.e_main},
                         {"e_zframe", r.e_zframe},
                         {"sigma0_norm", r.sigma0_norm},
                         {"flux_consistency", r.flux_consistency},
                         {"iterations", r.stats.iterations},
                         {"final_residual", r.stats.final_residual},
                         {"converged", r.stats.converged},
                         {"failed", r.failed},
                         {"error", r.error}});
  }

  j["trivial"] = rep.trivial;
  j["verdicts"] = json::array();
  for (const auto& v : rep.verdicts)
    j["verdicts"].push_back(
        {{"id", v.id}, {"state", verdict_name(v.state)}, {"note", v.note}});
  j["all_pass"] = rep.all_pass();

  os << j.dump(2) << '\n';
}

}  // namespace nbvi
