#include "nbvi/full_model.hpp"

#include <cstdio>
#include <vector>

namespace nbvi {

VIProblem assemble_full(const Mesh& mesh, const BeamGeometry& g,
                        const CoefficientSet& set,
                        const Eigen::VectorXd& eta_nodal,
                        const FeasibleSetSpec& feas) {
  feas.validate();
  const int n = mesh.n_dofs;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.cells.size() * 64);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  QuadPoint q[8];
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    int nq = cell_quadrature(mesh, (int)c, 2, q);
    bool outer = mesh.cell_tag[c] != SubdomainTag::OmegaZero;
    const auto& cell = mesh.cells[c];
    for (int p = 0; p < nq; ++p) {
      double eta = 0.0;
      for (int l = 0; l < 8; ++l) eta += q[p].N[l] * eta_nodal[cell[l]];
      CoefficientEval cf = eval_coeff(set, g, q[p].x, eta);
      Eigen::Matrix3d K = cf.A * cf.Phi * cf.B;
      double f = outer ? set.source.eval(q[p].x[0]) : 0.0;
      for (int a = 0; a < 8; ++a) {
        int ia = mesh.dof_map[cell[a]];
        if (ia == kDirichlet) continue;
        if (f != 0.0) rhs[ia] += q[p].w * f * q[p].N[a];
        Vec3 Kta = K.transpose() * q[p].grad[a];  // row a: grad_a' K grad_b
        for (int b = 0; b < 8; ++b) {
          int ib = mesh.dof_map[cell[b]];
          if (ib == kDirichlet) continue;
          trip.emplace_back(ia, ib, q[p].w * Kta.dot(q[p].grad[b]));
        }
      }
    }
  }

  VIProblem prob;
  prob.M.resize(n, n);
  prob.M.setFromTriplets(trip.begin(), trip.end());
  prob.rhs = std::move(rhs);
  prob.lower.resize(n);
  for (size_t node = 0; node < mesh.nodes.size(); ++node) {
    int d = mesh.dof_map[node];
    if (d != kDirichlet) prob.lower[d] = feas.bound_at(mesh.nodes[node][0]);
  }
  return prob;
}

std::vector<Vec3> full_flux(const Mesh& mesh, const BeamGeometry& g,
                            const CoefficientSet& set,
                            const Eigen::VectorXd& nodal) {
  std::vector<Vec3> flux;
  flux.reserve(mesh.cells.size() * 8);
  QuadPoint q[8];
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    int nq = cell_quadrature(mesh, (int)c, 2, q);
    const auto& cell = mesh.cells[c];
    for (int p = 0; p < nq; ++p) {
      double eta = 0.0;
      Vec3 grad = Vec3::Zero();
      for (int l = 0; l < 8; ++l) {
        eta += q[p].N[l] * nodal[cell[l]];
        grad += q[p].grad[l] * nodal[cell[l]];
      }
      CoefficientEval cf = eval_coeff(set, g, q[p].x, eta);
      flux.push_back(cf.A * cf.Phi * cf.B * grad);
    }
  }
  return flux;
}

FullSolution solve_full(const BeamGeometry& g, const Mesh& mesh,
                        const CoefficientSet& set, const FeasibleSetSpec& feas,
                        const SolverOptions& opt) {
  auto assembler = [&](const Eigen::VectorXd& dofs) {
    return assemble_full(mesh, g, set, nodal_from_dofs(mesh, dofs), feas);
  };
  auto [dofs, stats] = solve_quasilinear(
      assembler, Eigen::VectorXd::Zero(mesh.n_dofs), opt.outer());

  FullSolution sol;
  sol.geom = g;
  sol.mesh = mesh;
  sol.nodal = nodal_from_dofs(mesh, dofs);
  sol.flux = full_flux(mesh, g, set, sol.nodal);
  sol.stats = stats;
  return sol;
}

double gradient_energy(const Mesh& mesh, const Eigen::VectorXd& nodal,
                       const Vec3& grad_scale) {
  double acc = 0.0;
  QuadPoint q[8];
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    int nq = cell_quadrature(mesh, (int)c, 2, q);
    const auto& cell = mesh.cells[c];
    for (int p = 0; p < nq; ++p) {
      Vec3 grad = Vec3::Zero();
      for (int l = 0; l < mesh.nodes_per_cell(); ++l)
        grad += q[p].grad[l] * nodal[cell[l]];
      grad = grad.cwiseProduct(grad_scale);
      acc += q[p].w * grad.squaredNorm();
    }
  }
  return acc;
}

double scaled_energy(const Mesh& mesh, const BeamGeometry& g,
                     const Eigen::VectorXd& nodal) {
  return gradient_energy(mesh, nodal, Vec3::Ones()) / measure_omega(g);
}

void dump_solution(const FullSolution& sol, std::ostream& os) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "# eps=%.17g r_eps=%.17g t_eps=%.17g\n",
                sol.geom.eps, sol.geom.r_eps, sol.geom.t_eps);
  os << buf;
  for (size_t node = 0; node < sol.mesh.nodes.size(); ++node) {
    int d = sol.mesh.dof_map[node];
    if (d == kDirichlet) continue;
    std::snprintf(buf, sizeof(buf), "%d %.17g\n", d, sol.nodal[(int)node]);
    os << buf;
  }
}

void dump_flux(const FullSolution& sol, std::ostream& os) {
  char buf[320];
  QuadPoint q[8];
  size_t idx = 0;
  for (size_t c = 0; c < sol.mesh.cells.size(); ++c) {
    int nq = cell_quadrature(sol.mesh, (int)c, 2, q);
    for (int p = 0; p < nq; ++p, ++idx) {
      const Vec3& s = sol.flux[idx];
      std::snprintf(buf, sizeof(buf),
                    "%zu %d %.17g %.17g %.17g %.17g %.17g %.17g\n", c, p,
                    q[p].x[0], q[p].x[1], q[p].x[2], s[0], s[1], s[2]);
      os << buf;
    }
  }
}

}  // namespace nbvi
