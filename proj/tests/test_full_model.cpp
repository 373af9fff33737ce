#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "nbvi/coefficients.hpp"
#include "nbvi/full_model.hpp"
#include "nbvi/geometry.hpp"
#include "nbvi/mesh.hpp"

using namespace nbvi;

namespace {

BeamGeometry make_geom(double eps, double r, double t) {
  BeamGeometry g;
  g.eps = eps;
  g.r_eps = r;
  g.t_eps = t;
  return g;
}

FeasibleSetSpec unconstrained() {
  FeasibleSetSpec f;
  f.kind = FeasibleSetSpec::Kind::Unconstrained;
  return f;
}

FeasibleSetSpec nonnegative() {
  FeasibleSetSpec f;
  f.kind = FeasibleSetSpec::Kind::Nonnegative;
  return f;
}

// Series-conduction oracle: the beam acts as 1-D rods in series, with
// cross-section area eps^2 outside the notch and (eps r)^2 inside it.
// Solve -(k u')' = k_f on (-1,1), u(+-1)=0, with k_f = eps^2 on the
// loaded outer parts and 0 in the notch, by finite differences with
// harmonic-mean conductivities at the midpoints.
std::vector<double> series_oracle(double eps, double r, double t, int n) {
  const double h = 2.0 / n;
  auto cond = [&](double x) {
    return (std::abs(x) <= t) ? eps * eps * r * r : eps * eps;
  };
  auto load = [&](double x) { return (std::abs(x) <= t) ? 0.0 : eps * eps; };
  std::vector<double> diag(n - 1), off(n - 2), rhs(n - 1);
  for (int j = 1; j < n; ++j) {
    double xl = -1.0 + (j - 0.5) * h;
    double xr = -1.0 + (j + 0.5) * h;
    double kl = 2.0 / (1.0 / cond(xl - 0.25 * h) + 1.0 / cond(xl + 0.25 * h));
    double kr = 2.0 / (1.0 / cond(xr - 0.25 * h) + 1.0 / cond(xr + 0.25 * h));
    diag[j - 1] = (kl + kr) / (h * h);
    if (j < n - 1) off[j - 1] = -kr / (h * h);
    rhs[j - 1] = load(-1.0 + j * h);
  }
  // Thomas algorithm.
  std::vector<double> c(n - 2), d(n - 1);
  c[0] = off[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (int j = 1; j < n - 1; ++j) {
    double m = diag[j] - off[j - 1] * c[j - 1];
    if (j < n - 2) c[j] = off[j] / m;
    d[j] = (rhs[j] - off[j - 1] * d[j - 1]) / m;
  }
  std::vector<double> u(n + 1, 0.0);
  u[n - 1] = d[n - 2];
  for (int j = n - 3; j >= 0; --j) u[j + 1] = d[j] - c[j] * u[j + 2];
  return u;  // u[j] at x = -1 + j*h
}

}  // namespace

TEST_CASE("assembled rhs matches hand quadrature on a two-cell beam") {
  // Plain beam (no notch), n_axial=2, n_cross=1: two eps x eps x 1 cells.
  auto g = make_geom(0.25, 1.0, 0.0);
  Mesh mesh = build_beam_mesh(g, 2, 1, 1);
  CoefficientSet set = make_identity();
  set.source.kind = SourceSpec::Kind::Constant;
  set.source.amplitude = 1.0;

  Eigen::VectorXd eta = Eigen::VectorXd::Zero((int)mesh.nodes.size());
  VIProblem p = assemble_full(mesh, g, set, eta, unconstrained());

  // Free dofs are the four mid-plane nodes; each is a corner of both
  // cells, so rhs_i = 2 * (cell volume)/8 with volume eps^2.
  REQUIRE(p.dim() == 4);
  double expect = 2.0 * (g.eps * g.eps) / 8.0;
  for (int i = 0; i < 4; ++i) CHECK(p.rhs[i] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("assembled matrix is symmetric") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 8, 4, 2);
  CoefficientSet set = make_saturating();
  Eigen::VectorXd eta(mesh.nodes.size());
  for (int i = 0; i < (int)mesh.nodes.size(); ++i)
    eta[i] = std::sin(3.0 * mesh.nodes[i][0]) + 0.1 * mesh.nodes[i][1];
  VIProblem p = assemble_full(mesh, g, set, eta, unconstrained());

  Eigen::MatrixXd M = Eigen::MatrixXd(p.M);
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * M.cwiseAbs().maxCoeff());
}

TEST_CASE("zero source gives the zero solution in at most one outer pass") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 8, 4, 2);
  CoefficientSet set = make_saturating();
  set.source.kind = SourceSpec::Kind::Zero;

  FullSolution sol = solve_full(g, mesh, set, nonnegative(), SolverOptions{});
  CHECK(sol.stats.converged);
  CHECK(sol.stats.iterations <= 1);
  CHECK(sol.nodal.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("negative load with a nonnegative cone pins the solution at zero") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 8, 4, 2);
  CoefficientSet set = make_saturating();
  set.source.kind = SourceSpec::Kind::Constant;
  set.source.amplitude = -1.0;

  FullSolution sol = solve_full(g, mesh, set, nonnegative(), SolverOptions{});
  CHECK(sol.stats.converged);
  CHECK(sol.nodal.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("unconstrained identity solve tracks the series-conduction oracle") {
  const double eps = 0.05, r = 0.2, t = 0.04;
  auto g = make_geom(eps, r, t);
  Mesh mesh = build_beam_mesh(g, 64, 10, 2);
  CoefficientSet set = make_identity();
  set.source.kind = SourceSpec::Kind::Constant;
  set.source.amplitude = 1.0;

  SolverOptions opt;
  opt.omega = 1.9;
  FullSolution sol = solve_full(g, mesh, set, unconstrained(), opt);
  REQUIRE(sol.stats.converged);

  const int n1d = 4000;
  std::vector<double> u1d = series_oracle(eps, r, t, n1d);
  double umax = 0.0;
  for (double v : u1d) umax = std::max(umax, std::abs(v));
  REQUIRE(umax > 0.0);

  // Compare along the beam axis (x' = 0 is a node column for even
  // resolutions).  Model error is O(eps) near the junctions, so 10%.
  double worst = 0.0;
  int used = 0;
  for (int i = 0; i < (int)mesh.nodes.size(); ++i) {
    const Vec3& x = mesh.nodes[i];
    if (std::abs(x[1]) > 1e-12 || std::abs(x[2]) > 1e-12) continue;
    double s = (x[0] + 1.0) / 2.0 * n1d;
    int j = (int)std::floor(s);
    if (j >= n1d) j = n1d - 1;
    double w = s - j;
    double ref = (1.0 - w) * u1d[j] + w * u1d[j + 1];
    worst = std::max(worst, std::abs(sol.nodal[i] - ref));
    ++used;
  }
  CHECK(used >= 60);
  CHECK(worst <= 0.10 * umax);

  // The load pushes the membrane up everywhere strictly inside.
  double umax3d = sol.nodal.maxCoeff();
  CHECK(umax3d > 0.0);
  CHECK(sol.nodal.minCoeff() >= -1e-12);
}

TEST_CASE("scaled energy is zero for the zero field and one for U = x1") {
  auto g = make_geom(0.25, 1.0, 0.0);  // uniform beam, no notch
  Mesh mesh = build_beam_mesh(g, 8, 4, 1);

  Eigen::VectorXd zero = Eigen::VectorXd::Zero((int)mesh.nodes.size());
  CHECK(scaled_energy(mesh, g, zero) == 0.0);

  Eigen::VectorXd lin(mesh.nodes.size());
  for (int i = 0; i < (int)mesh.nodes.size(); ++i) lin[i] = mesh.nodes[i][0];
  CHECK(scaled_energy(mesh, g, lin) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("order-2 and order-4 quadratures agree on the energy") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 8, 4, 2);
  Eigen::VectorXd v(mesh.nodes.size());
  for (int i = 0; i < (int)mesh.nodes.size(); ++i) {
    const Vec3& x = mesh.nodes[i];
    v[i] = std::sin(2.0 * x[0]) + x[1] * x[2] + 0.3 * x[0] * x[1];
  }

  double e2 = gradient_energy(mesh, v, Vec3{1.0, 1.0, 1.0});

  // Recompute with 4-point Gauss per axis.  Gradients of trilinear hats
  // are axis-wise quadratic products, so both rules are exact and the
  // two totals must agree to roundoff.
  double e4 = 0.0;
  std::vector<QuadPoint> buf(64);
  for (int c = 0; c < (int)mesh.cells.size(); ++c) {
    int nq = cell_quadrature(mesh, c, 4, buf.data());
    for (int q = 0; q < nq; ++q) {
      Vec3 grad = Vec3::Zero();
      for (int l = 0; l < 8; ++l) grad += v[mesh.cells[c][l]] * buf[q].grad[l];
      e4 += buf[q].w * grad.squaredNorm();
    }
  }
  CHECK(e2 == doctest::Approx(e4).epsilon(1e-6));
}

TEST_CASE("energy is invariant under the y-frame change of variables") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 8, 4, 2);
  CoefficientSet set = make_saturating();
  set.source.kind = SourceSpec::Kind::Hat;
  set.source.amplitude = 4.0;

  FullSolution sol = solve_full(g, mesh, set, nonnegative(), SolverOptions{});
  REQUIRE(sol.stats.converged);

  double ex = gradient_energy(mesh, sol.nodal, Vec3{1.0, 1.0, 1.0});

  // In the y frame the transverse derivatives pick up 1/eps and the
  // volume element eps^2: int |grad U|^2 = eps^2 int |grad^eps u|^2.
  Mesh ym = transform_mesh(mesh, Frame::Y, g, Regime{});
  double ey = gradient_energy(ym, sol.nodal, Vec3{1.0, 1.0 / g.eps, 1.0 / g.eps});
  CHECK(ex == doctest::Approx(g.eps * g.eps * ey).epsilon(1e-10));
}

TEST_CASE("stored flux matches re-evaluation at the Gauss points") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 8, 4, 2);
  CoefficientSet set = make_saturating();
  set.source.kind = SourceSpec::Kind::Hat;
  set.source.amplitude = 4.0;

  FullSolution sol = solve_full(g, mesh, set, nonnegative(), SolverOptions{});
  REQUIRE(sol.stats.converged);

  std::vector<Vec3> again = full_flux(mesh, g, set, sol.nodal);
  REQUIRE(again.size() == sol.flux.size());
  double worst = 0.0;
  for (size_t k = 0; k < again.size(); ++k)
    worst = std::max(worst, (again[k] - sol.flux[k]).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-12);
}

TEST_CASE("solution satisfies discrete complementarity at the frozen state") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 8, 4, 2);
  CoefficientSet set = make_saturating();
  set.source.kind = SourceSpec::Kind::Sine;  // odd load makes a genuine active set
  set.source.amplitude = 2.0;
  set.source.wave = 1;

  FullSolution sol = solve_full(g, mesh, set, nonnegative(), SolverOptions{});
  REQUIRE(sol.stats.converged);

  VIProblem p = assemble_full(mesh, g, set, sol.nodal, nonnegative());
  Eigen::VectorXd U = dofs_from_nodal(mesh, sol.nodal);
  Eigen::VectorXd res = p.M * U - p.rhs;
  double scale = std::max(1.0, res.cwiseAbs().maxCoeff());
  for (int i = 0; i < p.dim(); ++i) {
    double gap = U[i] - p.lower[i];
    CHECK(gap >= -1e-10);
    CHECK(std::min(gap, res[i]) >= -1e-6 * scale);
  }
  CHECK(complementarity_residual(p, U) <= 1e-6 * p.dim());

  // The odd load must actually activate the constraint somewhere.
  int active = 0;
  for (int i = 0; i < p.dim(); ++i)
    if (U[i] - p.lower[i] <= 1e-12) ++active;
  CHECK(active > 0);
}

TEST_CASE("solution dump is deterministic and sized by the mesh") {
  auto g = make_geom(0.25, 0.5, 0.125);
  Mesh mesh = build_beam_mesh(g, 4, 4, 1);
  CoefficientSet set = make_identity();
  set.source.kind = SourceSpec::Kind::Constant;
  set.source.amplitude = 1.0;

  FullSolution sol = solve_full(g, mesh, set, unconstrained(), SolverOptions{});
  std::ostringstream sa, sb;
  dump_solution(sol, sa);
  dump_solution(sol, sb);
  std::string a = sa.str(), b = sb.str();
  CHECK(a == b);
  size_t lines = (size_t)std::count(a.begin(), a.end(), '\n');
  CHECK(lines == (size_t)mesh.n_dofs + 1);  // header + one line per free dof
  CHECK(a.rfind("# eps=", 0) == 0);
}
