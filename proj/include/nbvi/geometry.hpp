#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "nbvi/error.hpp"

namespace nbvi {

using Vec3 = Eigen::Vector3d;

// Reference cross-section S, a bounded planar domain containing the origin.
// The beam carries the scaled copies eps*S (outer parts) and eps*r*S (notch).
struct CrossSection {
  enum class Kind { SquareCentered, Disk };

  Kind kind = Kind::SquareCentered;
  // Square: (-half_width, half_width)^2.  Disk: radius about the origin.
  double extent = 0.5;

  double area() const;
  // Closure membership in reference coordinates, with a small tolerance so
  // nodes sitting exactly on the boundary count as inside.
  bool contains(double s2, double s3) const;
  // Maps a point of the reference square (-extent,extent)^2 onto the section.
  // The map is positively homogeneous of degree one, so the central sub-square
  // of side fraction r lands exactly on r*S; this keeps notch cross-sections
  // aligned with outer ones for every section kind.
  Eigen::Vector2d from_square(double s2, double s3) const;
};

// A single beam instance: length 2 along x1, outer cross-section eps*S,
// notch cross-section eps*r_eps*S over |x1| <= t_eps.
struct BeamGeometry {
  double eps = 0.1;
  double r_eps = 0.5;
  double t_eps = 0.1;
  CrossSection section;

  void validate() const;
};

enum class SubdomainTag { OmegaMinus, OmegaZero, OmegaPlus };

// c * base^power with base either eps itself or r(eps); the latter lets a
// family state t as an exact power of r (e.g. t = r^2).
struct PowerRule {
  enum class Base { Eps, R };
  Base base = Base::Eps;
  double coef = 1.0;
  double power = 1.0;
};

// Parametric family eps -> (r_eps, t_eps) together with the sweep values.
struct EpsFamily {
  PowerRule r_rule;  // base must be Eps
  PowerRule t_rule;
  std::vector<double> eps_list;  // strictly decreasing, positive

  double r_of(double eps) const;
  double t_of(double eps) const;
  void validate() const;
};

enum class RegimeCase { CaseA, CaseB, Other };

// Limits mu = lim t/r^2 and nu = lim eps/r.  CaseA: 0 < mu < inf, nu = 0.
// CaseB: mu = inf, 0 < nu < inf.  Infinity is encoded as +inf.
struct Regime {
  double mu = 0.0;
  double nu = 0.0;
  RegimeCase case_tag = RegimeCase::Other;
};

// Estimates the regime from the family's trailing entries.  Values below tol
// (above 1/tol) are promoted to 0 (+inf); otherwise a power-law trend fit on
// the last two entries decides between decay to 0, blow-up, and a finite
// limit taken from the smallest eps.  Throws NonMonotone when either ratio
// sequence rises and falls by more than tol, SweepTooShort below 2 entries.
Regime classify_regime(const EpsFamily& family, double tol = 1e-3);

BeamGeometry geometry_at(const EpsFamily& family, double eps,
                         const CrossSection& section = {});

// Closure membership of the physical point x in Omega_eps.
bool inside_beam(const BeamGeometry& g, const Vec3& x);

// Subdomain by axial coordinate; the notch [-t,t] is closed.
SubdomainTag subdomain_of(const BeamGeometry& g, double x1);

// |Omega_eps| in closed form: 2(1-t) eps^2 area(S) + 2t eps^2 r^2 area(S).
double measure_omega(const BeamGeometry& g);

// y-frame: y1 = x1, y' = x'/eps.  Throws OutsideDomain off the closure.
Vec3 map_y(const BeamGeometry& g, const Vec3& x);
Vec3 map_y_inv(const BeamGeometry& g, const Vec3& y);

// z-frame: z' = x'/(eps r); z1 is piecewise affine with the notch image
// [-mu,mu] when mu > 0 and [-t/r^2, t/r^2] when mu = 0.  Throws
// UnsupportedRegime when mu = +inf and OutsideDomain off the closure.
Vec3 map_z(const BeamGeometry& g, const Regime& regime, const Vec3& x);
Vec3 map_z_inv(const BeamGeometry& g, const Regime& regime, const Vec3& z);

}  // namespace nbvi
