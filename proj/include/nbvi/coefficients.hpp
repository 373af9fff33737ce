#pragma once

#include <cstdint>
#include <vector>

#include "nbvi/geometry.hpp"

namespace nbvi {

// Scalar rational function of the state, p(eta)/q(eta) with q > 0 on the
// admissible state range.  Coefficient order is ascending.
struct Rational {
  std::vector<double> num{1.0};
  std::vector<double> den{1.0};
  double eval(double eta) const;
};

// Coefficients of one branch of the material law: the quasilinear matrix is
// A * (phi(eta) * Phi_mat) * B with constant matrices and a scalar state
// factor.  Branch fields formally depend on scaled reference coordinates;
// the built-in families are homogeneous, so the dependence is trivial.
struct BranchCoefficients {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d B = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d Phi_mat = Eigen::Matrix3d::Identity();
  Rational phi;
};

struct SourceSpec {
  enum class Kind { Zero, Constant, Hat, Sine };
  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  int wave = 1;  // sine: amplitude * sin(wave * pi * x1)
  double eval(double x1) const;
};

// Constants of the coercivity / growth / monotonicity conditions.  The
// coercivity condition subtracts C2 |eta|^q1; any C2 > 0 makes it fail at
// xi = 0 for large states, so the default keeps C2 = 0.
struct AssumptionConstants {
  double C1 = 1.0;
  double C2 = 0.0;
  double q1 = 1.5;  // in (1, 2)
  double k1_bound = 0.0;
  double C_growth = 2.0;
  double alpha_bound = 0.0;
  double eta_min = -10.0;
  double eta_max = 10.0;
};

enum class FamilyTag { Identity, Saturating, Anisotropic, Custom };

struct CoefficientSet {
  FamilyTag tag = FamilyTag::Identity;
  BranchCoefficients outer;  // acts on Omega-+ / Y1
  BranchCoefficients notch;  // acts on Omega0 / Z0
  SourceSpec source;         // axial load supported on the outer parts only
  AssumptionConstants constants;
};

CoefficientSet make_identity();
// Phi = (1 + eta^2 / (1 + eta^2)) * I on both branches.
CoefficientSet make_saturating();
// Outer A = diag(1, a, a), notch A = diag(a0, 1, 1), B = I, saturating Phi.
CoefficientSet make_anisotropic(double a_outer, double a_notch);

struct CoefficientEval {
  Eigen::Matrix3d A, B, Phi;
  int branch = 1;          // 1 outer, 0 notch
  Vec3 ref = Vec3::Zero();  // scaled reference argument fed to the branch
};

// Branch selection by subdomain with the matching argument scaling: outer
// points feed (x1, x'/eps), notch points feed (x1/t, x'/(eps r)).
CoefficientEval eval_coeff(const CoefficientSet& set, const BeamGeometry& g,
                           const Vec3& x, double eta);
// Direct branch evaluation with an already-scaled reference argument.
CoefficientEval eval_branch(const CoefficientSet& set, int branch,
                            const Vec3& ref, double eta);

struct ConditionReport {
  double worst_margin = 0.0;
  int branch = 1;
  Vec3 ref = Vec3::Zero();
  double eta = 0.0;
  Vec3 xi = Vec3::Zero(), tau = Vec3::Zero();
  bool pass = true;
};

struct ValidationReport {
  ConditionReport coercivity, growth, monotonicity;
  int samples = 0;
  bool pass = true;
};

// Samples the three conditions over random (branch, reference point, state,
// directions) tuples plus deterministic corner probes (xi = 0, extreme
// states, axis directions).  A condition passes when its worst margin stays
// above -1e-10.
ValidationReport validate_assumptions(const CoefficientSet& set,
                                      const AssumptionConstants& consts,
                                      int samples, std::uint64_t seed);

}  // namespace nbvi
