#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <vector>

#include "nbvi/geometry.hpp"

namespace nbvi {

enum class BoundaryTag { GammaMinus, GammaPlus, Lateral };

// Boundary face: 1 node in 1-D, an edge (2) in 2-D, a quad (4) in 3-D.
// Unused slots hold -1.
struct BoundaryFace {
  std::array<int, 4> nodes{-1, -1, -1, -1};
  BoundaryTag tag = BoundaryTag::Lateral;
};

constexpr int kDirichlet = -1;

// Tensor-product Lagrange mesh of segments, quads, or hexes.  Local node l of
// a cell decodes as l = i + 2j + 4k with i, j, k the per-direction corners.
struct Mesh {
  int dim = 3;
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 8>> cells;  // unused slots -1
  std::vector<SubdomainTag> cell_tag;
  std::vector<BoundaryFace> boundary;
  std::vector<int> dof_map;  // node -> dof index, kDirichlet on Gamma+-
  int n_dofs = 0;

  std::vector<double> axial_planes;  // station coordinates along direction 0
  int nodes_on_left = 0;  // 1-D: nodes of the branch left of the doubled 0

  int nodes_per_cell() const { return 1 << dim; }
  double cell_volume(int cell) const;
  double total_volume() const;
};

// One Gauss point of a cell with shape data in physical coordinates.
struct QuadPoint {
  Vec3 x = Vec3::Zero();
  double w = 0.0;  // gauss weight times |J|
  std::array<double, 8> N{};
  std::array<Vec3, 8> grad{};
};

// Fills `out` (capacity order^dim, at most 64) and returns the point count.
int cell_quadrature(const Mesh& mesh, int cell, int order, QuadPoint* out);

// Beam mesh on Omega_eps.  The outer parts get n_axial/2 uniform axial cells
// each with the interface planes x1 = +-t_eps resolved exactly; the notch is
// refined axially by notch_refine relative to the outer spacing.  The cross
// grid is uniform with n_cross cells across the full width, and the notch
// occupies the centered block of m = r_eps * n_cross cells per side, so the
// notch interface is conforming by construction.  Throws MisalignedNotch when
// r_eps * n_cross is not an integer (within 1e-9) of the same parity as
// n_cross, EmptyNotch when the block would be empty.
Mesh build_beam_mesh(const BeamGeometry& g, int n_axial, int n_cross,
                     int notch_refine);

struct LimitMeshes {
  Mesh line;                  // (-1,0) u (0,1), doubled node at 0
  Mesh section;               // reference S, quads
  std::optional<Mesh> block;  // [-mu,mu] x S, Case A only
};

// Meshes for the dimension-reduced problems.  h_1d is the target spacing of
// the axial line mesh, n_cross the section resolution, n_block_axial the
// axial cell count of the junction block.  Throws UnsupportedRegime unless
// the regime is Case A or Case B.
LimitMeshes build_limit_meshes(const Regime& regime, double h_1d, int n_cross,
                               int n_block_axial,
                               const CrossSection& section = {});

enum class Frame { Y, Z };

// Same connectivity with nodes pushed through map_y / map_z.  Nodal field
// values transported unchanged represent the rescaled field; constants and
// nodal interpolation are preserved exactly.
Mesh transform_mesh(const Mesh& mesh, Frame frame, const BeamGeometry& g,
                    const Regime& regime = {});

// Evaluation of a nodal field on the 1-D line mesh.  Side picks the branch
// at the doubled node: Auto uses x1 < 0 -> left, x1 >= 0 -> right.
enum class Side { Auto, Left, Right };
double eval_line(const Mesh& line, const Eigen::VectorXd& nodal, double x1,
                 Side side = Side::Auto);

// Nodal vector from a dof vector (Dirichlet nodes zero) and back.
Eigen::VectorXd nodal_from_dofs(const Mesh& mesh, const Eigen::VectorXd& dofs);
Eigen::VectorXd dofs_from_nodal(const Mesh& mesh,
                                const Eigen::VectorXd& nodal);

// Plain-text dump: "n x y z" per node, then "c i0 .. i7 tag" per cell.
void dump_mesh(const Mesh& mesh, std::ostream& os);

}  // namespace nbvi
