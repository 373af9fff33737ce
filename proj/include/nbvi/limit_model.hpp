#pragma once

#include <ostream>
#include <utility>
#include <vector>

#include "nbvi/full_model.hpp"

namespace nbvi {

// Dof layout of the coupled limit system, packed as [u | w | u_hat | w_hat].
// The u block holds the free line dofs.  Every line node entry (station)
// carries a cross-section corrector field with section node `pin` held at
// zero; correctors enter the form only through transverse gradients, so the
// pin fixes their per-station constant kernel.  The notch block shares its
// end stations with the u dofs of the doubled node (junction traces as
// eliminated equalities); interior stations own one axial dof plus a
// corrector field.
struct LimitLayout {
  int n_u = 0;
  int n_stations = 0;      // line node entries
  int n_sec = 0;           // section mesh nodes
  int n_hat_stations = 0;  // block stations, 0 in Case B
  int pin = 0;
  int w_base = 0, hat_base = 0, what_base = 0, total = 0;
  int ju_minus = -1, ju_plus = -1;  // u dofs at 0- / 0+

  int w_dof(int station, int secnode) const;
  int hat_dof(int station) const;  // ends resolve to ju_minus / ju_plus
  int what_dof(int station, int secnode) const;
};

LimitLayout limit_layout(const Regime& regime, const LimitMeshes& meshes);

// Frozen-state operator of the limit system.  `state` is a packed dof
// vector supplying the eta argument of Phi (empty means zero).  The reduced
// gradients are (u', d2 w, d3 w) over the outer segments crossed with S and
// (u_hat', d2 w_hat, d3 w_hat) over the notch block; the source loads the
// u block only.
VIProblem assemble_limit(const Regime& regime, const LimitMeshes& meshes,
                         const CoefficientSet& set,
                         const Eigen::VectorXd& state,
                         const FeasibleSetSpec& feas);

struct LimitSolution {
  Regime regime;
  LimitMeshes meshes;
  Eigen::VectorXd dofs;   // packed solver output
  Eigen::VectorXd u;      // line nodal values, Dirichlet ends zero
  Eigen::MatrixXd w;      // station x section node, rows shifted to zero mean
  Eigen::VectorXd u_hat;  // block station values, ends equal u(0-+); Case A
  Eigen::MatrixXd w_hat;  // station x section node, zero-mean rows; Case A
  std::vector<Vec3> sigma1;  // flux at the Y1 tensor quadrature points
  std::vector<Vec3> sigma0;  // flux at the Z0 tensor quadrature points
  SolveStats stats;
};

// Coupled junction problem, finite mu > 0: unknowns (u, w, u_hat, w_hat).
LimitSolution solve_limit_caseA(const Regime& regime,
                                const CoefficientSet& set,
                                const FeasibleSetSpec& feas,
                                const LimitMeshes& meshes,
                                const SolverOptions& opt = {});
// Decoupled problem, mu = inf: unknowns (u, w); the halves meet 0 with
// natural conditions and no coupling.
LimitSolution solve_limit_caseB(const Regime& regime,
                                const CoefficientSet& set,
                                const FeasibleSetSpec& feas,
                                const LimitMeshes& meshes,
                                const SolverOptions& opt = {});
// Dispatch on regime.case_tag.
LimitSolution solve_limit(const Regime& regime, const CoefficientSet& set,
                          const FeasibleSetSpec& feas,
                          const LimitMeshes& meshes,
                          const SolverOptions& opt = {});

// Recomputes (sigma1, sigma0) from the solution fields; solve stores
// exactly this.
std::pair<std::vector<Vec3>, std::vector<Vec3>> flux_fields(
    const LimitSolution& sol, const CoefficientSet& set);

// Point values of the 1-D components.  eval_uhat clamps z1 to [-mu, mu], so
// off the block it returns the junction traces u(0-+), which is also the
// constant extension used by the z-frame error.
double eval_u(const LimitSolution& sol, double y1, Side side = Side::Auto);
double u0_minus(const LimitSolution& sol);
double u0_plus(const LimitSolution& sol);
double eval_uhat(const LimitSolution& sol, double z1);

// Cross-section mean of the axial flux component at y1.
double limit_mean_flux(const LimitSolution& sol, const CoefficientSet& set,
                       double y1, Side side = Side::Auto);

// Per-component plain-text blocks (u, w, u_hat, w_hat).
void dump_limit(const LimitSolution& sol, std::ostream& os);

}  // namespace nbvi
