#include "nbvi/limit_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nbvi/error.hpp"

namespace nbvi {

namespace {

double state_at(const Eigen::VectorXd& state, int dof) {
  return (dof >= 0 && dof < state.size()) ? state[dof] : 0.0;
}

// 1-D mesh over the block stations so the z-axial direction reuses the
// segment quadrature path.
Mesh hat_line_mesh(const Mesh& block) {
  Mesh m;
  m.dim = 1;
  m.axial_planes = block.axial_planes;
  for (double z : block.axial_planes) m.nodes.push_back({z, 0, 0});
  for (size_t k = 0; k + 1 < m.nodes.size(); ++k) {
    m.cells.push_back({(int)k, (int)k + 1, -1, -1, -1, -1, -1, -1});
    m.cell_tag.push_back(SubdomainTag::OmegaZero);
  }
  m.dof_map.resize(m.nodes.size());
  for (size_t i = 0; i < m.nodes.size(); ++i) m.dof_map[i] = (int)i;
  m.n_dofs = (int)m.nodes.size();
  return m;
}

struct LocalDof {
  int dof;
  Vec3 g;       // reduced-gradient contribution of the basis function
  double load;  // source test value, u dofs only
};

// Shifts each row (one section field) by its quadrature mean; the shift
// moves along the constant kernel, gradients are unchanged.
void shift_to_zero_mean(Eigen::MatrixXd& rows, const Mesh& sec) {
  double area = sec.total_volume();
  QuadPoint sq[4];
  for (int r = 0; r < rows.rows(); ++r) {
    double acc = 0.0;
    for (size_t c = 0; c < sec.cells.size(); ++c) {
      int ns = cell_quadrature(sec, (int)c, 2, sq);
      for (int p = 0; p < ns; ++p) {
        double v = 0.0;
        for (int b = 0; b < 4; ++b) v += sq[p].N[b] * rows(r, sec.cells[c][b]);
        acc += sq[p].w * v;
      }
    }
    rows.row(r).array() -= acc / area;
  }
}

}  // namespace

int LimitLayout::w_dof(int station, int secnode) const {
  int j = secnode < pin ? secnode : secnode - 1;
  return w_base + station * (n_sec - 1) + j;
}

int LimitLayout::hat_dof(int station) const {
  if (station == 0) return ju_minus;
  if (station == n_hat_stations - 1) return ju_plus;
  return hat_base + station - 1;
}

int LimitLayout::what_dof(int station, int secnode) const {
  int j = secnode < pin ? secnode : secnode - 1;
  return what_base + station * (n_sec - 1) + j;
}

LimitLayout limit_layout(const Regime& regime, const LimitMeshes& meshes) {
  LimitLayout L;
  L.n_u = meshes.line.n_dofs;
  L.n_stations = (int)meshes.line.nodes.size();
  L.n_sec = (int)meshes.section.nodes.size();
  L.w_base = L.n_u;
  L.hat_base = L.w_base + L.n_stations * (L.n_sec - 1);
  if (regime.case_tag == RegimeCase::CaseA) {
    require(meshes.block.has_value(), ErrorCode::BadConfig,
            "Case A layout needs the notch block mesh");
    L.n_hat_stations = (int)meshes.block->axial_planes.size();
    L.ju_minus = meshes.line.dof_map[meshes.line.nodes_on_left - 1];
    L.ju_plus = meshes.line.dof_map[meshes.line.nodes_on_left];
    L.what_base = L.hat_base + (L.n_hat_stations - 2);
    L.total = L.what_base + L.n_hat_stations * (L.n_sec - 1);
  } else {
    L.what_base = L.hat_base;
    L.total = L.hat_base;
  }
  return L;
}

VIProblem assemble_limit(const Regime& regime, const LimitMeshes& meshes,
                         const CoefficientSet& set,
                         const Eigen::VectorXd& state,
                         const FeasibleSetSpec& feas) {
  feas.validate();
  LimitLayout L = limit_layout(regime, meshes);
  const Mesh& line = meshes.line;
  const Mesh& sec = meshes.section;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(line.cells.size() * sec.cells.size() * 800);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L.total);

  QuadPoint lq[2], sq[4];
  std::vector<LocalDof> loc;
  loc.reserve(10);

  // Outer segments crossed with S.
  for (size_t lc = 0; lc < line.cells.size(); ++lc) {
    int nl = cell_quadrature(line, (int)lc, 2, lq);
    int a0 = line.cells[lc][0], a1 = line.cells[lc][1];
    for (size_t scell = 0; scell < sec.cells.size(); ++scell) {
      int ns = cell_quadrature(sec, (int)scell, 2, sq);
      for (int lp = 0; lp < nl; ++lp) {
        double y1 = lq[lp].x[0];
        double f = set.source.eval(y1);
        double eta = lq[lp].N[0] * state_at(state, line.dof_map[a0]) +
                     lq[lp].N[1] * state_at(state, line.dof_map[a1]);
        for (int sp = 0; sp < ns; ++sp) {
          double wgt = lq[lp].w * sq[sp].w;
          CoefficientEval cf = eval_branch(
              set, 1, {y1, sq[sp].x[1], sq[sp].x[2]}, eta);
          Eigen::Matrix3d K = cf.A * cf.Phi * cf.B;

          loc.clear();
          for (int a = 0; a < 2; ++a) {
            int dof = line.dof_map[line.cells[lc][a]];
            if (dof != kDirichlet)
              loc.push_back(
                  {dof, {lq[lp].grad[a][0], 0, 0}, lq[lp].N[a]});
          }
          for (int a = 0; a < 2; ++a) {
            int st = line.cells[lc][a];
            for (int b = 0; b < 4; ++b) {
              int n = sec.cells[scell][b];
              if (n == L.pin) continue;
              loc.push_back({L.w_dof(st, n),
                             {0, lq[lp].N[a] * sq[sp].grad[b][1],
                              lq[lp].N[a] * sq[sp].grad[b][2]},
                             0.0});
            }
          }
          for (const auto& i : loc) {
            if (i.load != 0.0 && f != 0.0) rhs[i.dof] += wgt * f * i.load;
            Vec3 Kti = K.transpose() * i.g;
            for (const auto& j : loc)
              trip.emplace_back(i.dof, j.dof, wgt * Kti.dot(j.g));
          }
        }
      }
    }
  }

  // Notch block [-mu, mu] x S; no source here.
  if (L.n_hat_stations > 0) {
    Mesh hat = hat_line_mesh(*meshes.block);
    double mu = regime.mu;
    for (size_t zc = 0; zc < hat.cells.size(); ++zc) {
      int nl = cell_quadrature(hat, (int)zc, 2, lq);
      int k0 = hat.cells[zc][0], k1 = hat.cells[zc][1];
      for (size_t scell = 0; scell < sec.cells.size(); ++scell) {
        int ns = cell_quadrature(sec, (int)scell, 2, sq);
        for (int lp = 0; lp < nl; ++lp) {
          double z1 = lq[lp].x[0];
          double eta = lq[lp].N[0] * state_at(state, L.hat_dof(k0)) +
                       lq[lp].N[1] * state_at(state, L.hat_dof(k1));
          for (int sp = 0; sp < ns; ++sp) {
            double wgt = lq[lp].w * sq[sp].w;
            CoefficientEval cf = eval_branch(
                set, 0, {z1 / mu, sq[sp].x[1], sq[sp].x[2]}, eta);
            Eigen::Matrix3d K = cf.A * cf.Phi * cf.B;

            loc.clear();
            for (int a = 0; a < 2; ++a) {
              int st = hat.cells[zc][a];
              loc.push_back(
                  {L.hat_dof(st), {lq[lp].grad[a][0], 0, 0}, 0.0});
              for (int b = 0; b < 4; ++b) {
                int n = sec.cells[scell][b];
                if (n == L.pin) continue;
                loc.push_back({L.what_dof(st, n),
                               {0, lq[lp].N[a] * sq[sp].grad[b][1],
                                lq[lp].N[a] * sq[sp].grad[b][2]},
                               0.0});
              }
            }
            for (const auto& i : loc) {
              Vec3 Kti = K.transpose() * i.g;
              for (const auto& j : loc)
                trip.emplace_back(i.dof, j.dof, wgt * Kti.dot(j.g));
            }
          }
        }
      }
    }
  }

  VIProblem prob;
  prob.M.resize(L.total, L.total);
  prob.M.setFromTriplets(trip.begin(), trip.end());
  prob.rhs = std::move(rhs);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  prob.lower = Eigen::VectorXd::Constant(L.total, -kInf);
  for (size_t n = 0; n < line.nodes.size(); ++n) {
    int dof = line.dof_map[n];
    if (dof != kDirichlet) prob.lower[dof] = feas.bound_at(line.nodes[n][0]);
  }
  // The notch collapses to x1 = 0, so its stations take the bound there;
  // the shared junction dofs already carry the same value.
  for (int k = 1; k + 1 < L.n_hat_stations; ++k)
    prob.lower[L.hat_dof(k)] = feas.bound_at(0.0);
  return prob;
}

LimitSolution solve_limit(const Regime& regime, const CoefficientSet& set,
                          const FeasibleSetSpec& feas,
                          const LimitMeshes& meshes,
                          const SolverOptions& opt) {
  require(regime.case_tag == RegimeCase::CaseA ||
              regime.case_tag == RegimeCase::CaseB,
          ErrorCode::UnsupportedRegime,
          "limit problems exist only in Case A and Case B");

  LimitLayout L = limit_layout(regime, meshes);
  auto assembler = [&](const Eigen::VectorXd& s) {
    return assemble_limit(regime, meshes, set, s, feas);
  };
  auto [dofs, stats] = solve_quasilinear(
      assembler, Eigen::VectorXd::Zero(L.total), opt.outer());

  LimitSolution sol;
  sol.regime = regime;
  sol.meshes = meshes;
  sol.dofs = dofs;
  sol.stats = stats;

  const Mesh& line = meshes.line;
  sol.u.resize((int)line.nodes.size());
  for (size_t n = 0; n < line.nodes.size(); ++n)
    sol.u[(int)n] = state_at(dofs, line.dof_map[n]);

  sol.w.setZero(L.n_stations, L.n_sec);
  for (int st = 0; st < L.n_stations; ++st)
    for (int n = 0; n < L.n_sec; ++n)
      if (n != L.pin) sol.w(st, n) = dofs[L.w_dof(st, n)];
  shift_to_zero_mean(sol.w, meshes.section);

  if (L.n_hat_stations > 0) {
    sol.u_hat.resize(L.n_hat_stations);
    for (int k = 0; k < L.n_hat_stations; ++k)
      sol.u_hat[k] = state_at(dofs, L.hat_dof(k));
    sol.w_hat.setZero(L.n_hat_stations, L.n_sec);
    for (int k = 0; k < L.n_hat_stations; ++k)
      for (int n = 0; n < L.n_sec; ++n)
        if (n != L.pin) sol.w_hat(k, n) = dofs[L.what_dof(k, n)];
    shift_to_zero_mean(sol.w_hat, meshes.section);
  }

  auto [s1, s0] = flux_fields(sol, set);
  sol.sigma1 = std::move(s1);
  sol.sigma0 = std::move(s0);
  return sol;
}

LimitSolution solve_limit_caseA(const Regime& regime,
                                const CoefficientSet& set,
                                const FeasibleSetSpec& feas,
                                const LimitMeshes& meshes,
                                const SolverOptions& opt) {
  require(regime.case_tag == RegimeCase::CaseA, ErrorCode::UnsupportedRegime,
          "case A solver needs finite mu > 0 and nu = 0");
  return solve_limit(regime, set, feas, meshes, opt);
}

LimitSolution solve_limit_caseB(const Regime& regime,
                                const CoefficientSet& set,
                                const FeasibleSetSpec& feas,
                                const LimitMeshes& meshes,
                                const SolverOptions& opt) {
  require(regime.case_tag == RegimeCase::CaseB, ErrorCode::UnsupportedRegime,
          "case B solver needs mu = inf and finite nu > 0");
  return solve_limit(regime, set, feas, meshes, opt);
}

std::pair<std::vector<Vec3>, std::vector<Vec3>> flux_fields(
    const LimitSolution& sol, const CoefficientSet& set) {
  const Mesh& line = sol.meshes.line;
  const Mesh& sec = sol.meshes.section;
  std::vector<Vec3> s1, s0;
  QuadPoint lq[2], sq[4];

  for (size_t lc = 0; lc < line.cells.size(); ++lc) {
    int nl = cell_quadrature(line, (int)lc, 2, lq);
    int a0 = line.cells[lc][0], a1 = line.cells[lc][1];
    for (size_t scell = 0; scell < sec.cells.size(); ++scell) {
      int ns = cell_quadrature(sec, (int)scell, 2, sq);
      for (int lp = 0; lp < nl; ++lp) {
        double du =
            lq[lp].grad[0][0] * sol.u[a0] + lq[lp].grad[1][0] * sol.u[a1];
        double eta = lq[lp].N[0] * sol.u[a0] + lq[lp].N[1] * sol.u[a1];
        for (int sp = 0; sp < ns; ++sp) {
          Vec3 G(du, 0, 0);
          for (int a = 0; a < 2; ++a) {
            int st = line.cells[lc][a];
            for (int b = 0; b < 4; ++b) {
              int n = sec.cells[scell][b];
              G[1] += lq[lp].N[a] * sq[sp].grad[b][1] * sol.w(st, n);
              G[2] += lq[lp].N[a] * sq[sp].grad[b][2] * sol.w(st, n);
            }
          }
          CoefficientEval cf = eval_branch(
              set, 1, {lq[lp].x[0], sq[sp].x[1], sq[sp].x[2]}, eta);
          s1.push_back(cf.A * cf.Phi * cf.B * G);
        }
      }
    }
  }

  if (sol.u_hat.size() > 0 && sol.meshes.block) {
    Mesh hat = hat_line_mesh(*sol.meshes.block);
    double mu = sol.regime.mu;
    for (size_t zc = 0; zc < hat.cells.size(); ++zc) {
      int nl = cell_quadrature(hat, (int)zc, 2, lq);
      int k0 = hat.cells[zc][0], k1 = hat.cells[zc][1];
      for (size_t scell = 0; scell < sec.cells.size(); ++scell) {
        int ns = cell_quadrature(sec, (int)scell, 2, sq);
        for (int lp = 0; lp < nl; ++lp) {
          double du = lq[lp].grad[0][0] * sol.u_hat[k0] +
                      lq[lp].grad[1][0] * sol.u_hat[k1];
          double eta =
              lq[lp].N[0] * sol.u_hat[k0] + lq[lp].N[1] * sol.u_hat[k1];
          for (int sp = 0; sp < ns; ++sp) {
            Vec3 G(du, 0, 0);
            for (int a = 0; a < 2; ++a) {
              int st = hat.cells[zc][a];
              for (int b = 0; b < 4; ++b) {
                int n = sec.cells[scell][b];
                G[1] += lq[lp].N[a] * sq[sp].grad[b][1] * sol.w_hat(st, n);
                G[2] += lq[lp].N[a] * sq[sp].grad[b][2] * sol.w_hat(st, n);
              }
            }
            CoefficientEval cf = eval_branch(
                set, 0, {lq[lp].x[0] / mu, sq[sp].x[1], sq[sp].x[2]}, eta);
            s0.push_back(cf.A * cf.Phi * cf.B * G);
          }
        }
      }
    }
  }
  return {std::move(s1), std::move(s0)};
}

double eval_u(const LimitSolution& sol, double y1, Side side) {
  return eval_line(sol.meshes.line, sol.u, y1, side);
}

double u0_minus(const LimitSolution& sol) {
  return sol.u[sol.meshes.line.nodes_on_left - 1];
}

double u0_plus(const LimitSolution& sol) {
  return sol.u[sol.meshes.line.nodes_on_left];
}

double eval_uhat(const LimitSolution& sol, double z1) {
  require(sol.u_hat.size() > 0 && sol.meshes.block.has_value(),
          ErrorCode::UnsupportedRegime, "no notch block in this regime");
  const auto& zs = sol.meshes.block->axial_planes;
  int n = (int)zs.size();
  double z = std::clamp(z1, zs.front(), zs.back());
  int k = 0;
  while (k + 2 < n && z > zs[k + 1]) ++k;
  double h = zs[k + 1] - zs[k];
  double lam = std::clamp((z - zs[k]) / h, 0.0, 1.0);
  return (1.0 - lam) * sol.u_hat[k] + lam * sol.u_hat[k + 1];
}

double limit_mean_flux(const LimitSolution& sol, const CoefficientSet& set,
                       double y1, Side side) {
  const Mesh& line = sol.meshes.line;
  const Mesh& sec = sol.meshes.section;
  if (side == Side::Auto) side = y1 < 0.0 ? Side::Left : Side::Right;
  int first = side == Side::Left ? 0 : line.nodes_on_left;
  int count = side == Side::Left
                  ? line.nodes_on_left
                  : (int)line.nodes.size() - line.nodes_on_left;
  double a = line.nodes[first][0];
  double b = line.nodes[first + count - 1][0];
  double s = std::clamp((y1 - a) / (b - a) * (count - 1), 0.0,
                        (double)(count - 1));
  int i = std::clamp((int)std::floor(s), 0, count - 2);
  double lam = std::clamp(s - i, 0.0, 1.0);
  int n0 = first + i, n1 = first + i + 1;
  double h = line.nodes[n1][0] - line.nodes[n0][0];
  double du = (sol.u[n1] - sol.u[n0]) / h;
  double uval = (1.0 - lam) * sol.u[n0] + lam * sol.u[n1];

  double acc = 0.0;
  QuadPoint sq[4];
  for (size_t c = 0; c < sec.cells.size(); ++c) {
    int ns = cell_quadrature(sec, (int)c, 2, sq);
    for (int p = 0; p < ns; ++p) {
      Vec3 G(du, 0, 0);
      for (int bb = 0; bb < 4; ++bb) {
        int n = sec.cells[c][bb];
        double wv = (1.0 - lam) * sol.w(n0, n) + lam * sol.w(n1, n);
        G[1] += sq[p].grad[bb][1] * wv;
        G[2] += sq[p].grad[bb][2] * wv;
      }
      CoefficientEval cf =
          eval_branch(set, 1, {y1, sq[p].x[1], sq[p].x[2]}, uval);
      acc += sq[p].w * (cf.A * cf.Phi * cf.B * G)[0];
    }
  }
  return acc / sec.total_volume();
}

void dump_limit(const LimitSolution& sol, std::ostream& os) {
  char buf[128];
  const Mesh& line = sol.meshes.line;
  os << "# component u mesh line nodes " << sol.u.size() << "\n";
  for (int n = 0; n < sol.u.size(); ++n) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", line.nodes[n][0],
                  sol.u[n]);
    os << buf;
  }
  os << "# component w mesh section stations " << sol.w.rows()
     << " section_nodes " << sol.w.cols() << "\n";
  for (int st = 0; st < sol.w.rows(); ++st) {
    std::snprintf(buf, sizeof(buf), "%.17g", line.nodes[st][0]);
    os << buf;
    for (int n = 0; n < sol.w.cols(); ++n) {
      std::snprintf(buf, sizeof(buf), " %.17g", sol.w(st, n));
      os << buf;
    }
    os << "\n";
  }
  if (sol.u_hat.size() > 0 && sol.meshes.block) {
    const auto& zs = sol.meshes.block->axial_planes;
    os << "# component u_hat mesh block stations " << sol.u_hat.size()
       << "\n";
    for (int k = 0; k < sol.u_hat.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", zs[k], sol.u_hat[k]);
      os << buf;
    }
    os << "# component w_hat mesh block stations " << sol.w_hat.rows()
       << " section_nodes " << sol.w_hat.cols() << "\n";
    for (int k = 0; k < sol.w_hat.rows(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", zs[k]);
      os << buf;
      for (int n = 0; n < sol.w_hat.cols(); ++n) {
        std::snprintf(buf, sizeof(buf), " %.17g", sol.w_hat(k, n));
        os << buf;
      }
      os << "\n";
    }
  }
}

}  // namespace nbvi
