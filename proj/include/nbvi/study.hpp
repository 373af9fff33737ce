#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "nbvi/limit_model.hpp"

namespace nbvi {

// Resolution controls of one sweep.  Zero means pick automatically: the
// cross resolution snaps r_eps to the grid (m = r * n_cross integer of
// matching parity) with the smallest relative snap error that fits the dof
// budget, at a fixed even axial resolution.
struct MeshControls {
  int n_cross = 0;
  int n_axial = 0;
  int notch_refine = 4;
  int dof_budget = 60000;
  double h_1d = 1.0 / 128;  // limit line spacing
  int limit_n_cross = 4;
  int n_block_axial = 8;
};

struct StudyTolerances {
  double energy_ratio = 10.0;  // V1: max/min bound on the scaled energy
  double sigma0_ratio = 10.0;  // V4: max/min bound on sigma0_norm
  double slack = 0.05;         // decreasing verdicts allow this relative rise
  double final_ratio = 0.5;    // V2: last row must undercut first * ratio
  double trivial_eps = 1e-14;  // below this everything counts as zero
};

struct StudyConfig {
  EpsFamily family;
  CrossSection section;
  CoefficientSet set;
  FeasibleSetSpec feas;
  MeshControls mesh;
  SolverOptions solver;
  double ball_radius = -1.0;  // z-frame window; negative means mu + 1
  StudyTolerances tol;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Grid-aligned geometry of one sweep row: r snapped to m / n_cross and t
// recomputed from the exact t/r^2 so the regime parameter mu is preserved
// bitwise across the snap.
struct RowResolution {
  int n_cross = 0, n_axial = 0, m = 0;
  double r_used = 0.0, t_used = 0.0;
};

RowResolution pick_resolution(const MeshControls& mesh,
                              const EpsFamily& family, double eps);

struct StudyRow {
  double eps = 0.0, r_used = 0.0, t_used = 0.0;
  int n_axial = 0, n_cross = 0, n_dofs = 0;
  double scaled_energy = 0.0;
  double e_main = 0.0;
  double e_zframe = 0.0;      // Case A only, else 0
  double sigma0_norm = 0.0;   // Case A only, else 0
  double flux_consistency = 0.0;
  SolveStats stats;
  bool failed = false;
  std::string error;
};

enum class Verdict { Pass, Fail, Inconclusive };

struct VerdictEntry {
  std::string id;
  Verdict state = Verdict::Inconclusive;
  std::string note;
};

struct StudyReport {
  Regime regime;
  std::vector<StudyRow> rows;
  double u0m = 0.0, u0p = 0.0;  // limit traces at the junction
  bool trivial = false;
  std::vector<VerdictEntry> verdicts;

  bool all_pass() const;
};

// (1/|Omega_eps|) int |U(x) - u(x1)|^2 with the reference field evaluated
// at (x1, sign of x1); the limit wrapper extends u by its traces over the
// notch gap |x1| <= t.
double scaled_l2_error_vs(const FullSolution& sol,
                          const std::function<double(double, int)>& uref);
double scaled_l2_error(const FullSolution& sol, const LimitSolution& limit);

// L2 distance between the z-pushed solution and the limit u_hat (extended
// by the junction traces off the block) over the window Z_eps n B(0, R).
// Cells fully inside the ball integrate by Gauss quadrature; straddling
// cells are cut into sub-boxes sized to the window and sampled at centers.
double zframe_error(const FullSolution& sol, const LimitSolution& limit,
                    const Regime& regime, double R);

// || A0 Phi0(u_hat_eps) B0 g ||_{L2(Z0)} with the scaled gradient
// g = ((t/mu) d1 U, r^2 d2 U, r^2 d3 U) of the pushed notch field.
double sigma0_norm(const FullSolution& sol, const CoefficientSet& set,
                   const Regime& regime);

// Mean absolute gap between the per-slab cross-section mean of the stored
// 3-D axial flux and the limit prediction, over fixed outer stations.
double flux_consistency(const FullSolution& sol, const LimitSolution& limit,
                        const CoefficientSet& set);

StudyReport run_study(const StudyConfig& cfg);

// Deterministic writers; the JSON variant embeds the resolved config.
void write_csv(const StudyReport& rep, std::ostream& os);
void write_json(const StudyReport& rep, const StudyConfig& cfg,
                std::ostream& os);

}  // namespace nbvi
