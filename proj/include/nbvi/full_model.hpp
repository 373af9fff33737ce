#pragma once

#include "nbvi/coefficients.hpp"
#include "nbvi/mesh.hpp"
#include "nbvi/vi_core.hpp"

namespace nbvi {

struct SolverOptions {
  double omega = 1.5;
  double tol = 1e-10;
  int max_iter = 500000;
  bool verify_spd = false;
  double damping = 1.0;
  double tol_outer = 1e-8;
  int max_outer = 40;

  PsorOptions inner() const {
    return PsorOptions{omega, tol, max_iter, verify_spd, {}};
  }
  QuasiOptions outer() const {
    return QuasiOptions{damping, tol_outer, max_outer, inner()};
  }
};

// Stiffness of the frozen-state operator: M_ij = int [A Phi(eta) B grad
// phi_j, grad phi_i] over the beam, rhs_i = int f phi_i over the outer
// parts, per-dof lower bounds from the feasible set.  Dirichlet dofs on
// Gamma+- are eliminated (their value is 0).
VIProblem assemble_full(const Mesh& mesh, const BeamGeometry& g,
                        const CoefficientSet& set,
                        const Eigen::VectorXd& eta_nodal,
                        const FeasibleSetSpec& feas);

struct FullSolution {
  BeamGeometry geom;
  Mesh mesh;
  Eigen::VectorXd nodal;  // node values, Dirichlet nodes zero
  // Final flux A Phi(U) B grad U at the 2x2x2 Gauss points, cell-major.
  std::vector<Vec3> flux;
  SolveStats stats;
};

FullSolution solve_full(const BeamGeometry& g, const Mesh& mesh,
                        const CoefficientSet& set, const FeasibleSetSpec& feas,
                        const SolverOptions& opt = {});

// Recomputes the final flux of a solution; solve_full stores exactly this.
std::vector<Vec3> full_flux(const Mesh& mesh, const BeamGeometry& g,
                            const CoefficientSet& set,
                            const Eigen::VectorXd& nodal);

// (1/|Omega_eps|) int |grad U|^2.
double scaled_energy(const Mesh& mesh, const BeamGeometry& g,
                     const Eigen::VectorXd& nodal);

// int |grad U|^2 over a mesh in any frame, with the gradient rescaled by
// the given per-direction factors (e.g. (1, 1/eps, 1/eps) in the y-frame).
double gradient_energy(const Mesh& mesh, const Eigen::VectorXd& nodal,
                       const Vec3& grad_scale);

// Plain-text dumps: solution as "dof value" lines after a geometry header,
// flux as "cell q x y z s1 s2 s3" lines.
void dump_solution(const FullSolution& sol, std::ostream& os);
void dump_flux(const FullSolution& sol, std::ostream& os);

}  // namespace nbvi
