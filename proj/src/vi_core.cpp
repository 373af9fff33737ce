#include "nbvi/vi_core.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace nbvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs_coeff(const Eigen::SparseMatrix<double, Eigen::RowMajor>& M) {
  double m = 0.0;
  for (int k = 0; k < M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(M, k);
         it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

bool is_symmetric(const Eigen::SparseMatrix<double, Eigen::RowMajor>& M) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> Mt = M.transpose();
  Eigen::SparseMatrix<double, Eigen::RowMajor> D = M - Mt;
  double scale = std::max(1e-300, max_abs_coeff(M));
  return max_abs_coeff(D) <= 1e-12 * scale;
}

// Largest eigenvalue scale of op by power iteration.
template <class Op>
double power_norm(int n, const Op& op, int iters) {
  if (n == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0);
  v += Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);  // break symmetry, fixed seed
  v.normalize();
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    Eigen::VectorXd w = op(v);
    lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    v = w / lambda;
  }
  return lambda;
}

void check_spd_probe(const VIProblem& p) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> Mt = p.M.transpose();
  auto H = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(0.5 * (p.M * v + Mt * v));
  };
  double lmax = power_norm(p.dim(), H, 20);
  // Smallest eigenvalue via the shifted operator lmax I - H.
  auto Hs = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(lmax * v - H(v));
  };
  double shift = power_norm(p.dim(), Hs, 20);
  double lmin = lmax - shift;
  require(lmin > -1e-10 * std::max(1.0, lmax), ErrorCode::BadConfig,
          "symmetric part fails the positive-definiteness probe");
}

std::pair<Eigen::VectorXd, SolveStats> forward_backward(
    const VIProblem& p, const PsorOptions& opt, Eigen::VectorXd U) {
  // Projected forward-backward splitting for nonsymmetric operators with
  // step 1/L, L = ||M|| estimated by 20 power iterations on M^T M.
  Eigen::SparseMatrix<double, Eigen::RowMajor> Mt = p.M.transpose();
  auto MtM = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(Mt * (p.M * v));
  };
  double L = std::sqrt(std::max(power_norm(p.dim(), MtM, 20), 1e-300));
  double step = 1.0 / L;

  SolveStats stats;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::VectorXd r = p.M * U - p.rhs;
    U -= step * r;
    for (int i = 0; i < p.dim(); ++i)
      if (p.lower[i] > -kInf) U[i] = std::max(U[i], p.lower[i]);
    stats.iterations = it;
    stats.final_residual = complementarity_residual(p, U);
    if (stats.final_residual <= opt.tol) {
      stats.converged = true;
      break;
    }
  }
  return {std::move(U), stats};
}

}  // namespace

double complementarity_residual(const VIProblem& p, const Eigen::VectorXd& U) {
  Eigen::VectorXd r = p.M * U - p.rhs;
  double worst = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    if (p.lower[i] > -kInf) {
      worst = std::max(worst, p.lower[i] - U[i]);  // infeasibility
      if (U[i] <= p.lower[i])
        worst = std::max(worst, -r[i]);  // active: residual must be >= 0
      else
        worst = std::max(worst, std::abs(r[i]));
    } else {
      worst = std::max(worst, std::abs(r[i]));
    }
  }
  return worst;
}

std::pair<Eigen::VectorXd, SolveStats> solve_linear_vi(const VIProblem& p,
                                                       const PsorOptions& opt) {
  const int n = p.dim();
  require(p.M.rows() == n && p.M.cols() == n && p.lower.size() == n,
          ErrorCode::BadConfig, "inconsistent problem dimensions");
  require(opt.omega > 0.0 && opt.omega < 2.0, ErrorCode::BadConfig,
          "relaxation parameter must lie in (0, 2)");

  Eigen::VectorXd U = opt.init.size() == n
                          ? opt.init
                          : Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (p.lower[i] > -kInf) U[i] = std::max(U[i], p.lower[i]);

  if (n == 0) return {U, SolveStats{0, 0.0, true}};

  Eigen::VectorXd diag(n);
  diag.setZero();
  for (int k = 0; k < p.M.outerSize(); ++k)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(p.M,
                                                                        k);
         it; ++it)
      if (it.row() == it.col()) diag[it.row()] = it.value();
  for (int i = 0; i < n; ++i)
    require(diag[i] > 0.0, ErrorCode::NonPositiveDiagonal,
            "matrix diagonal must be positive for projected relaxation");

  if (opt.verify_spd) check_spd_probe(p);
  if (!is_symmetric(p.M)) return forward_backward(p, opt, std::move(U));

  SolveStats stats;
  for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
    for (int i = 0; i < n; ++i) {
      double sigma = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
               p.M, i);
           it; ++it)
        if (it.col() != i) sigma += it.value() * U[it.col()];
      double candidate = (p.rhs[i] - sigma) / diag[i];
      double next = U[i] + opt.omega * (candidate - U[i]);
      if (p.lower[i] > -kInf) next = std::max(next, p.lower[i]);
      U[i] = next;
    }
    stats.iterations = sweep;
    stats.final_residual = complementarity_residual(p, U);
    if (stats.final_residual <= opt.tol) {
      stats.converged = true;
      break;
    }
  }
  return {std::move(U), stats};
}

Eigen::VectorXd brute_force_vi(const VIProblem& p) {
  const int n = p.dim();
  require(n <= 16, ErrorCode::TooLarge,
          "exhaustive active-set enumeration is limited to 16 dofs");
  Eigen::MatrixXd M = Eigen::MatrixXd(p.M);

  std::vector<int> constrained;
  for (int i = 0; i < n; ++i)
    if (p.lower[i] > -kInf) constrained.push_back(i);
  const int K = (int)constrained.size();
  constexpr double kTol = 1e-10;

  for (std::uint64_t mask = 0; mask < (1ull << K); ++mask) {
    std::vector<bool> active(n, false);
    for (int b = 0; b < K; ++b)
      if (mask & (1ull << b)) active[constrained[b]] = true;

    std::vector<int> free;
    for (int i = 0; i < n; ++i)
      if (!active[i]) free.push_back(i);

    Eigen::VectorXd U(n);
    for (int i = 0; i < n; ++i) U[i] = active[i] ? p.lower[i] : 0.0;

    if (!free.empty()) {
      Eigen::MatrixXd Mff((int)free.size(), (int)free.size());
      Eigen::VectorXd b((int)free.size());
      for (size_t a = 0; a < free.size(); ++a) {
        b[(int)a] = p.rhs[free[a]];
        for (int i = 0; i < n; ++i)
          if (active[i]) b[(int)a] -= M(free[a], i) * p.lower[i];
        for (size_t c = 0; c < free.size(); ++c)
          Mff((int)a, (int)c) = M(free[a], free[c]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Mff);
      if (!lu.isInvertible()) continue;
      Eigen::VectorXd Uf = lu.solve(b);
      for (size_t a = 0; a < free.size(); ++a) U[free[a]] = Uf[(int)a];
    }

    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      if (!active[i] && p.lower[i] > -kInf)
        ok = U[i] >= p.lower[i] - kTol;
    if (ok) {
      Eigen::VectorXd r = M * U - p.rhs;
      for (int i = 0; i < n && ok; ++i)
        if (active[i]) ok = r[i] >= -kTol;
    }
    if (ok) return U;
  }
  throw Error(ErrorCode::NoValidActiveSet,
              "no active set satisfies feasibility and residual signs");
}

std::pair<Eigen::VectorXd, SolveStats> solve_quasilinear(
    const std::function<VIProblem(const Eigen::VectorXd&)>& assembler,
    Eigen::VectorXd init, const QuasiOptions& opt) {
  require(opt.damping > 0.0 && opt.damping <= 1.0, ErrorCode::BadConfig,
          "damping must lie in (0, 1]");
  Eigen::VectorXd U = std::move(init);
  SolveStats outer;
  for (int k = 1; k <= opt.max_outer; ++k) {
    VIProblem p = assembler(U);
    PsorOptions inner = opt.inner;
    inner.init = U;
    auto [candidate, stats] = solve_linear_vi(p, inner);
    if (!stats.converged) {
      // Inner failure: stop and hand back the inner solver's best iterate.
      outer.converged = false;
      outer.final_residual = stats.final_residual;
      return {std::move(candidate), outer};
    }
    Eigen::VectorXd next = (1.0 - opt.damping) * U + opt.damping * candidate;
    double delta = (next - U).lpNorm<Eigen::Infinity>();
    U = std::move(next);
    outer.final_residual = delta;
    if (delta <= opt.tol_outer) {
      outer.converged = true;
      return {std::move(U), outer};
    }
    outer.iterations = k;  // inner solves that moved the iterate
  }
  outer.converged = false;
  return {std::move(U), outer};
}

double FeasibleSetSpec::bound_at(double x1) const {
  switch (kind) {
    case Kind::Unconstrained:
      return -kInf;
    case Kind::Nonnegative:
      return 0.0;
    case Kind::LowerObstacle:
      return offset + curvature * (x1 * x1 - 1.0);
  }
  return -kInf;
}

void FeasibleSetSpec::validate() const {
  if (kind == Kind::LowerObstacle)
    require(offset <= 0.0 && curvature >= 0.0, ErrorCode::BadConfig,
            "obstacle must stay nonpositive: offset <= 0, curvature >= 0");
}

}  // namespace nbvi
