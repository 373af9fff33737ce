#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <utility>

#include "nbvi/error.hpp"

namespace nbvi {

// Finite-dimensional variational inequality: find U >= lower with
// (M U - rhs)_i >= 0 where the bound is active and = 0 where it is not.
// lower = -inf marks an unconstrained dof.
struct VIProblem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> M;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;

  int dim() const { return (int)rhs.size(); }
};

struct SolveStats {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

struct PsorOptions {
  double omega = 1.5;  // projected SOR relaxation, in (0, 2)
  double tol = 1e-10;
  int max_iter = 500000;
  bool verify_spd = false;         // power-iteration probe of the
                                   // symmetric part before solving
  Eigen::VectorXd init;            // warm start; empty means zeros
};

// Worst complementarity violation: where U sits on the bound the residual
// r = MU - rhs may not be negative, elsewhere it must vanish; infeasibility
// U < lower counts as well.
double complementarity_residual(const VIProblem& p, const Eigen::VectorXd& U);

// Projected SOR for (near-)symmetric operators; nonsymmetric operators fall
// back to projected forward-backward splitting with step 1/L, L estimated by
// 20 power iterations.  Non-convergence is reported through the stats, not
// thrown; throws NonPositiveDiagonal before iterating when a diagonal entry
// is not positive.
std::pair<Eigen::VectorXd, SolveStats> solve_linear_vi(
    const VIProblem& p, const PsorOptions& opt = {});

// Exhaustive active-set reference solver for dim <= 16: tries every subset
// of the constrained dofs in increasing bitmask order and returns the first
// candidate that is feasible with admissible residual signs (tolerance
// 1e-10).  Throws TooLarge beyond 16 dofs, NoValidActiveSet if nothing
// qualifies.
Eigen::VectorXd brute_force_vi(const VIProblem& p);

struct QuasiOptions {
  double damping = 1.0;  // in (0, 1]
  double tol_outer = 1e-8;
  int max_outer = 40;
  PsorOptions inner;
};

// Damped Picard iteration U <- (1-d) U + d solve(assembler(U)).  Stops when
// the sup-norm increment drops to tol_outer; iterations counts the inner
// solves that still moved the iterate, so a state-independent operator
// reports 1 and a fixed-point start reports 0.
std::pair<Eigen::VectorXd, SolveStats> solve_quasilinear(
    const std::function<VIProblem(const Eigen::VectorXd&)>& assembler,
    Eigen::VectorXd init, const QuasiOptions& opt = {});

// Pointwise feasible sets of the continuous problems, realized as per-dof
// lower bounds on nodal values.
struct FeasibleSetSpec {
  enum class Kind { Unconstrained, Nonnegative, LowerObstacle };
  Kind kind = Kind::Unconstrained;
  // Obstacle psi(x1) = offset + curvature * (x1^2 - 1); requiring
  // offset <= 0 and curvature >= 0 keeps psi <= 0 over [-1, 1].
  double offset = 0.0;
  double curvature = 0.0;

  double bound_at(double x1) const;
  void validate() const;
};

}  // namespace nbvi
