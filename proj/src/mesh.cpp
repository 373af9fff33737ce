#include "nbvi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace nbvi {

namespace {

struct GaussRule {
  int n;
  const double* xi;
  const double* w;
};

const double g1x[] = {0.0};
const double g1w[] = {2.0};
const double g2x[] = {-0.5773502691896257, 0.5773502691896257};
const double g2w[] = {1.0, 1.0};
const double g3x[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
const double g3w[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
const double g4x[] = {-0.8611363115940526, -0.3399810435848563,
                      0.3399810435848563, 0.8611363115940526};
const double g4w[] = {0.3478548451374538, 0.6521451548625461,
                      0.6521451548625461, 0.3478548451374538};

GaussRule gauss(int order) {
  switch (order) {
    case 1:
      return {1, g1x, g1w};
    case 2:
      return {2, g2x, g2w};
    case 3:
      return {3, g3x, g3w};
    default:
      return {4, g4x, g4w};
  }
}

// Active physical coordinates by mesh dimension: line meshes live along
// direction 0, section meshes in the (1,2) plane, volumes use all three.
void active_coords(int dim, int* coords) {
  if (dim == 1) {
    coords[0] = 0;
  } else if (dim == 2) {
    coords[0] = 1;
    coords[1] = 2;
  } else {
    coords[0] = 0;
    coords[1] = 1;
    coords[2] = 2;
  }
}

}  // namespace

int cell_quadrature(const Mesh& mesh, int cell, int order, QuadPoint* out) {
  const int dim = mesh.dim;
  const int nloc = mesh.nodes_per_cell();
  GaussRule rule = gauss(order);
  int coords[3] = {0, 1, 2};
  active_coords(dim, coords);

  Vec3 xn[8];
  for (int l = 0; l < nloc; ++l) xn[l] = mesh.nodes[mesh.cells[cell][l]];

  int count = 0;
  int reps[3] = {rule.n, dim > 1 ? rule.n : 1, dim > 2 ? rule.n : 1};
  for (int k = 0; k < reps[2]; ++k)
    for (int j = 0; j < reps[1]; ++j)
      for (int i = 0; i < reps[0]; ++i) {
        double xi[3] = {rule.xi[i], dim > 1 ? rule.xi[j] : 0.0,
                        dim > 2 ? rule.xi[k] : 0.0};
        double wg = rule.w[i] * (dim > 1 ? rule.w[j] : 1.0) *
                    (dim > 2 ? rule.w[k] : 1.0);

        QuadPoint& q = out[count++];
        double dN[8][3];
        q.x.setZero();
        for (int l = 0; l < nloc; ++l) {
          double val = 1.0;
          for (int d = 0; d < dim; ++d) {
            double s = (l >> d) & 1 ? 1.0 : -1.0;
            val *= 0.5 * (1.0 + s * xi[d]);
          }
          q.N[l] = val;
          for (int d = 0; d < dim; ++d) {
            double der = 1.0;
            for (int e = 0; e < dim; ++e) {
              double s = (l >> e) & 1 ? 1.0 : -1.0;
              der *= (e == d) ? 0.5 * s : 0.5 * (1.0 + s * xi[e]);
            }
            dN[l][d] = der;
          }
          q.x += q.N[l] * xn[l];
        }

        Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
        for (int a = 0; a < dim; ++a)
          for (int b = 0; b < dim; ++b) {
            double sum = 0.0;
            for (int l = 0; l < nloc; ++l)
              sum += xn[l][coords[a]] * dN[l][b];
            J(a, b) = sum;
          }
        double detJ = J.block(0, 0, dim, dim)
                          .determinant();  // dim x dim principal block
        Eigen::Matrix3d Jinv = Eigen::Matrix3d::Identity();
        Jinv.block(0, 0, dim, dim) =
            J.block(0, 0, dim, dim).inverse().eval();

        q.w = wg * std::abs(detJ);
        for (int l = 0; l < nloc; ++l) {
          q.grad[l].setZero();
          for (int a = 0; a < dim; ++a) {
            double sum = 0.0;
            for (int b = 0; b < dim; ++b) sum += Jinv(b, a) * dN[l][b];
            q.grad[l][coords[a]] = sum;
          }
        }
      }
  return count;
}

double Mesh::cell_volume(int cell) const {
  QuadPoint q[8];
  int n = cell_quadrature(*this, cell, 2, q);
  double v = 0.0;
  for (int i = 0; i < n; ++i) v += q[i].w;
  return v;
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (size_t c = 0; c < cells.size(); ++c) v += cell_volume((int)c);
  return v;
}

namespace {

// Station grid of the beam: outer stations carry the full cross grid, notch
// interior stations only the centered block.
struct StationLayout {
  std::vector<double> x;      // station coordinate
  std::vector<bool> full;     // full cross grid at this station
  std::vector<int> base;      // first node id of the station
  int n_cross = 0, m = 0, offset = 0;
  int notch_first_slab = -1, notch_slab_count = 0;

  int node(int station, int j2, int j3) const {
    if (full[station]) return base[station] + j3 * (n_cross + 1) + j2;
    return base[station] + (j3 - offset) * (m + 1) + (j2 - offset);
  }
};

}  // namespace

Mesh build_beam_mesh(const BeamGeometry& g, int n_axial, int n_cross,
                     int notch_refine) {
  g.validate();
  require(n_axial >= 2 && n_axial % 2 == 0, ErrorCode::BadConfig,
          "n_axial must be even and at least 2");
  require(n_cross >= 1, ErrorCode::BadConfig, "n_cross must be positive");
  require(notch_refine >= 1, ErrorCode::BadConfig,
          "notch_refine must be at least 1");

  const double t = g.t_eps, hw = g.section.extent;
  StationLayout st;
  st.n_cross = n_cross;

  if (t > 0.0) {
    double m_real = g.r_eps * n_cross;
    long m = std::lround(m_real);
    require(m >= 1, ErrorCode::EmptyNotch,
            "notch cross-section is below one cell; raise n_cross");
    require(std::abs(m_real - (double)m) <= 1e-9, ErrorCode::MisalignedNotch,
            "r_eps * n_cross must be an integer for a conforming notch");
    require((n_cross - m) % 2 == 0, ErrorCode::MisalignedNotch,
            "r_eps * n_cross must share parity with n_cross so the notch "
            "block is centered");
    st.m = (int)m;
    st.offset = (n_cross - (int)m) / 2;

    int n_half = n_axial / 2;
    double h_out = (1.0 - t) / n_half;
    int n_notch = notch_refine *
                  std::max(1L, std::lround(2.0 * t / h_out));
    for (int i = 0; i <= n_half; ++i)
      st.x.push_back(i == n_half ? -t : -1.0 + i * (1.0 - t) / n_half);
    for (int j = 1; j < n_notch; ++j)
      st.x.push_back(-t + j * (2.0 * t) / n_notch);
    for (int i = 0; i <= n_half; ++i)
      st.x.push_back(i == 0 ? t : (i == n_half ? 1.0 : t + i * h_out));
    st.full.assign(st.x.size(), true);
    for (int j = 1; j < n_notch; ++j) st.full[n_half + j] = false;
    st.notch_first_slab = n_half;
    st.notch_slab_count = n_notch;
  } else {
    // Degenerate notch: plain beam.
    st.m = n_cross;
    st.offset = 0;
    for (int i = 0; i <= n_axial; ++i)
      st.x.push_back(i == n_axial ? 1.0 : -1.0 + 2.0 * i / n_axial);
    st.full.assign(st.x.size(), true);
  }

  std::vector<double> sq(n_cross + 1);
  for (int j = 0; j <= n_cross; ++j) sq[j] = hw * (2.0 * j / n_cross - 1.0);

  Mesh mesh;
  mesh.dim = 3;
  mesh.axial_planes = st.x;

  const int n_stations = (int)st.x.size();
  st.base.resize(n_stations);
  for (int s = 0; s < n_stations; ++s) {
    st.base[s] = (int)mesh.nodes.size();
    int lo = st.full[s] ? 0 : st.offset;
    int hi = st.full[s] ? n_cross : st.offset + st.m;
    for (int j3 = lo; j3 <= hi; ++j3)
      for (int j2 = lo; j2 <= hi; ++j2) {
        Eigen::Vector2d p = g.section.from_square(sq[j2], sq[j3]);
        mesh.nodes.push_back({st.x[s], g.eps * p[0], g.eps * p[1]});
      }
  }

  auto add_cell = [&](int s, int c2, int c3, SubdomainTag tag) {
    std::array<int, 8> cell;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
          cell[i + 2 * j + 4 * k] = st.node(s + i, c2 + j, c3 + k);
    mesh.cells.push_back(cell);
    mesh.cell_tag.push_back(tag);
  };

  for (int s = 0; s + 1 < n_stations; ++s) {
    bool in_notch = st.notch_first_slab >= 0 && s >= st.notch_first_slab &&
                    s < st.notch_first_slab + st.notch_slab_count;
    double mid = 0.5 * (st.x[s] + st.x[s + 1]);
    SubdomainTag tag = in_notch ? SubdomainTag::OmegaZero
                                : (mid < 0.0 ? SubdomainTag::OmegaMinus
                                             : SubdomainTag::OmegaPlus);
    int lo = in_notch ? st.offset : 0;
    int hi = in_notch ? st.offset + st.m : n_cross;
    for (int c3 = lo; c3 < hi; ++c3)
      for (int c2 = lo; c2 < hi; ++c2) add_cell(s, c2, c3, tag);
  }

  auto add_face = [&](int a, int b, int c, int d, BoundaryTag tag) {
    mesh.boundary.push_back({{a, b, c, d}, tag});
  };

  // Base faces at x1 = -1 and x1 = +1.
  for (int end = 0; end < 2; ++end) {
    int s = end == 0 ? 0 : n_stations - 1;
    BoundaryTag tag = end == 0 ? BoundaryTag::GammaMinus : BoundaryTag::GammaPlus;
    for (int c3 = 0; c3 < n_cross; ++c3)
      for (int c2 = 0; c2 < n_cross; ++c2)
        add_face(st.node(s, c2, c3), st.node(s, c2 + 1, c3),
                 st.node(s, c2 + 1, c3 + 1), st.node(s, c2, c3 + 1), tag);
  }
  // Lateral faces of every slab, following each slab's own cross extent.
  for (int s = 0; s + 1 < n_stations; ++s) {
    bool in_notch = st.notch_first_slab >= 0 && s >= st.notch_first_slab &&
                    s < st.notch_first_slab + st.notch_slab_count;
    int lo = in_notch ? st.offset : 0;
    int hi = in_notch ? st.offset + st.m : n_cross;
    for (int c = lo; c < hi; ++c) {
      add_face(st.node(s, c, lo), st.node(s, c + 1, lo),
               st.node(s + 1, c + 1, lo), st.node(s + 1, c, lo),
               BoundaryTag::Lateral);
      add_face(st.node(s, c, hi), st.node(s, c + 1, hi),
               st.node(s + 1, c + 1, hi), st.node(s + 1, c, hi),
               BoundaryTag::Lateral);
      add_face(st.node(s, lo, c), st.node(s, lo, c + 1),
               st.node(s + 1, lo, c + 1), st.node(s + 1, lo, c),
               BoundaryTag::Lateral);
      add_face(st.node(s, hi, c), st.node(s, hi, c + 1),
               st.node(s + 1, hi, c + 1), st.node(s + 1, hi, c),
               BoundaryTag::Lateral);
    }
  }
  // Interface annuli at +-t: outer cross cells outside the notch block face
  // the void left by the notch.
  if (st.notch_first_slab >= 0 && st.m < n_cross) {
    for (int which = 0; which < 2; ++which) {
      int s = which == 0 ? st.notch_first_slab
                         : st.notch_first_slab + st.notch_slab_count;
      for (int c3 = 0; c3 < n_cross; ++c3)
        for (int c2 = 0; c2 < n_cross; ++c2) {
          bool in_block = c2 >= st.offset && c2 < st.offset + st.m &&
                          c3 >= st.offset && c3 < st.offset + st.m;
          if (in_block) continue;
          add_face(st.node(s, c2, c3), st.node(s, c2 + 1, c3),
                   st.node(s, c2 + 1, c3 + 1), st.node(s, c2, c3 + 1),
                   BoundaryTag::Lateral);
        }
    }
  }

  mesh.dof_map.assign(mesh.nodes.size(), 0);
  for (const auto& f : mesh.boundary)
    if (f.tag != BoundaryTag::Lateral)
      for (int n : f.nodes)
        if (n >= 0) mesh.dof_map[n] = kDirichlet;
  mesh.n_dofs = 0;
  for (auto& d : mesh.dof_map)
    if (d != kDirichlet) d = mesh.n_dofs++;

  return mesh;
}

namespace {

Mesh build_section_mesh(const CrossSection& section, int n_cross) {
  Mesh mesh;
  mesh.dim = 2;
  std::vector<double> sq(n_cross + 1);
  for (int j = 0; j <= n_cross; ++j)
    sq[j] = section.extent * (2.0 * j / n_cross - 1.0);
  for (int j3 = 0; j3 <= n_cross; ++j3)
    for (int j2 = 0; j2 <= n_cross; ++j2) {
      Eigen::Vector2d p = section.from_square(sq[j2], sq[j3]);
      mesh.nodes.push_back({0.0, p[0], p[1]});
    }
  auto id = [&](int j2, int j3) { return j3 * (n_cross + 1) + j2; };
  for (int c3 = 0; c3 < n_cross; ++c3)
    for (int c2 = 0; c2 < n_cross; ++c2) {
      mesh.cells.push_back({id(c2, c3), id(c2 + 1, c3), id(c2, c3 + 1),
                            id(c2 + 1, c3 + 1), -1, -1, -1, -1});
      mesh.cell_tag.push_back(SubdomainTag::OmegaZero);
    }
  for (int c = 0; c < n_cross; ++c) {
    mesh.boundary.push_back({{id(c, 0), id(c + 1, 0), -1, -1},
                             BoundaryTag::Lateral});
    mesh.boundary.push_back({{id(c, n_cross), id(c + 1, n_cross), -1, -1},
                             BoundaryTag::Lateral});
    mesh.boundary.push_back({{id(0, c), id(0, c + 1), -1, -1},
                             BoundaryTag::Lateral});
    mesh.boundary.push_back({{id(n_cross, c), id(n_cross, c + 1), -1, -1},
                             BoundaryTag::Lateral});
  }
  mesh.dof_map.resize(mesh.nodes.size());
  for (size_t i = 0; i < mesh.nodes.size(); ++i) mesh.dof_map[i] = (int)i;
  mesh.n_dofs = (int)mesh.nodes.size();
  return mesh;
}

}  // namespace

LimitMeshes build_limit_meshes(const Regime& regime, double h_1d, int n_cross,
                               int n_block_axial,
                               const CrossSection& section) {
  require(regime.case_tag != RegimeCase::Other, ErrorCode::UnsupportedRegime,
          "limit problems exist only in Case A and Case B");
  require(h_1d > 0.0 && h_1d <= 1.0, ErrorCode::BadConfig,
          "h_1d must lie in (0, 1]");
  require(n_cross >= 1 && n_block_axial >= 1, ErrorCode::BadConfig,
          "limit mesh resolutions must be positive");

  LimitMeshes lm;

  // Line mesh on (-1,0) u (0,1) with a doubled node at 0 so the solution may
  // jump there.
  int n_seg = std::max(1L, std::lround(1.0 / h_1d));
  Mesh& line = lm.line;
  line.dim = 1;
  for (int i = 0; i <= n_seg; ++i)
    line.nodes.push_back({i == n_seg ? 0.0 : -1.0 + (double)i / n_seg, 0, 0});
  for (int i = 0; i <= n_seg; ++i)
    line.nodes.push_back({i == n_seg ? 1.0 : (double)i / n_seg, 0, 0});
  line.nodes_on_left = n_seg + 1;
  for (int side = 0; side < 2; ++side) {
    int base = side * (n_seg + 1);
    for (int i = 0; i < n_seg; ++i) {
      line.cells.push_back({base + i, base + i + 1, -1, -1, -1, -1, -1, -1});
      line.cell_tag.push_back(side == 0 ? SubdomainTag::OmegaMinus
                                        : SubdomainTag::OmegaPlus);
    }
  }
  line.boundary.push_back({{0, -1, -1, -1}, BoundaryTag::GammaMinus});
  line.boundary.push_back(
      {{(int)line.nodes.size() - 1, -1, -1, -1}, BoundaryTag::GammaPlus});
  for (const auto& n : line.nodes) line.axial_planes.push_back(n[0]);
  line.dof_map.assign(line.nodes.size(), 0);
  line.dof_map.front() = kDirichlet;
  line.dof_map.back() = kDirichlet;
  line.n_dofs = 0;
  for (auto& d : line.dof_map)
    if (d != kDirichlet) d = line.n_dofs++;

  lm.section = build_section_mesh(section, n_cross);

  if (regime.case_tag == RegimeCase::CaseA) {
    double mu = regime.mu;
    Mesh block;
    block.dim = 3;
    int nsec = (int)lm.section.nodes.size();
    for (int k = 0; k <= n_block_axial; ++k) {
      double z1 = (k == 0) ? -mu
                           : (k == n_block_axial
                                  ? mu
                                  : -mu + 2.0 * mu * k / n_block_axial);
      block.axial_planes.push_back(z1);
      for (int i = 0; i < nsec; ++i)
        block.nodes.push_back(
            {z1, lm.section.nodes[i][1], lm.section.nodes[i][2]});
    }
    // Section quad corners are ordered (j2,j3) = (0,0),(1,0),(0,1),(1,1);
    // lift them along z1 keeping the l = i + 2j + 4k convention with i the
    // axial corner.
    for (int k = 0; k < n_block_axial; ++k)
      for (const auto& qc : lm.section.cells) {
        std::array<int, 8> cell;
        for (int kk = 0; kk < 2; ++kk)
          for (int jj = 0; jj < 2; ++jj)
            for (int ii = 0; ii < 2; ++ii)
              cell[ii + 2 * jj + 4 * kk] = (k + ii) * nsec + qc[jj + 2 * kk];
        block.cells.push_back(cell);
        block.cell_tag.push_back(SubdomainTag::OmegaZero);
      }
    for (const auto& qc : lm.section.cells) {
      block.boundary.push_back({{qc[0], qc[1], qc[3], qc[2]},
                                BoundaryTag::GammaMinus});
      int off = n_block_axial * nsec;
      block.boundary.push_back(
          {{off + qc[0], off + qc[1], off + qc[3], off + qc[2]},
           BoundaryTag::GammaPlus});
    }
    block.dof_map.resize(block.nodes.size());
    for (size_t i = 0; i < block.nodes.size(); ++i)
      block.dof_map[i] = (int)i;
    block.n_dofs = (int)block.nodes.size();
    lm.block = std::move(block);
  }

  return lm;
}

Mesh transform_mesh(const Mesh& mesh, Frame frame, const BeamGeometry& g,
                    const Regime& regime) {
  Mesh out = mesh;
  for (auto& n : out.nodes)
    n = (frame == Frame::Y) ? map_y(g, n) : map_z(g, regime, n);
  for (auto& p : out.axial_planes) {
    Vec3 probe{p, 0, 0};
    p = (frame == Frame::Y) ? map_y(g, probe)[0] : map_z(g, regime, probe)[0];
  }
  return out;
}

double eval_line(const Mesh& line, const Eigen::VectorXd& nodal, double x1,
                 Side side) {
  if (side == Side::Auto) side = x1 < 0.0 ? Side::Left : Side::Right;
  int first = side == Side::Left ? 0 : line.nodes_on_left;
  int count = side == Side::Left
                  ? line.nodes_on_left
                  : (int)line.nodes.size() - line.nodes_on_left;
  double a = line.nodes[first][0];
  double b = line.nodes[first + count - 1][0];
  double s = (x1 - a) / (b - a) * (count - 1);
  int i = std::clamp((int)std::floor(s), 0, count - 2);
  double theta = std::clamp(s - i, 0.0, 1.0);
  return (1.0 - theta) * nodal[first + i] + theta * nodal[first + i + 1];
}

Eigen::VectorXd nodal_from_dofs(const Mesh& mesh,
                                const Eigen::VectorXd& dofs) {
  Eigen::VectorXd nodal = Eigen::VectorXd::Zero((int)mesh.nodes.size());
  for (size_t n = 0; n < mesh.nodes.size(); ++n)
    if (mesh.dof_map[n] != kDirichlet) nodal[(int)n] = dofs[mesh.dof_map[n]];
  return nodal;
}

Eigen::VectorXd dofs_from_nodal(const Mesh& mesh,
                                const Eigen::VectorXd& nodal) {
  Eigen::VectorXd dofs = Eigen::VectorXd::Zero(mesh.n_dofs);
  for (size_t n = 0; n < mesh.nodes.size(); ++n)
    if (mesh.dof_map[n] != kDirichlet) dofs[mesh.dof_map[n]] = nodal[(int)n];
  return dofs;
}

void dump_mesh(const Mesh& mesh, std::ostream& os) {
  char buf[256];
  for (const auto& n : mesh.nodes) {
    std::snprintf(buf, sizeof(buf), "n %.17g %.17g %.17g\n", n[0], n[1], n[2]);
    os << buf;
  }
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    os << "c";
    for (int l = 0; l < 8; ++l)
      os << ' ' << (l < mesh.nodes_per_cell() ? mesh.cells[c][l] : -1);
    switch (mesh.cell_tag[c]) {
      case SubdomainTag::OmegaMinus:
        os << " minus\n";
        break;
      case SubdomainTag::OmegaZero:
        os << " zero\n";
        break;
      case SubdomainTag::OmegaPlus:
        os << " plus\n";
        break;
    }
  }
}

}  // namespace nbvi
