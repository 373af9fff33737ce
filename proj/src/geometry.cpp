#include "nbvi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nbvi {

namespace {

constexpr double kMemberTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_point(const Vec3& p) {
  std::ostringstream os;
  os << "(" << p[0] << ", " << p[1] << ", " << p[2] << ")";
  return os.str();
}

}  // namespace

double CrossSection::area() const {
  switch (kind) {
    case Kind::SquareCentered:
      return 4.0 * extent * extent;
    case Kind::Disk:
      return M_PI * extent * extent;
  }
  return 0.0;
}

bool CrossSection::contains(double s2, double s3) const {
  double tol = kMemberTol * std::max(1.0, extent);
  switch (kind) {
    case Kind::SquareCentered:
      return std::max(std::abs(s2), std::abs(s3)) <= extent + tol;
    case Kind::Disk:
      return std::hypot(s2, s3) <= extent + tol;
  }
  return false;
}

Eigen::Vector2d CrossSection::from_square(double s2, double s3) const {
  if (kind == Kind::SquareCentered) return {s2, s3};
  // Radial square-to-disk map p -> p * |p|_inf / |p|_2.  Homogeneous of
  // degree one, hence compatible with the notch scaling r*S.
  double ninf = std::max(std::abs(s2), std::abs(s3));
  double n2 = std::hypot(s2, s3);
  if (n2 == 0.0) return {0.0, 0.0};
  double scale = ninf / n2;
  return {s2 * scale, s3 * scale};
}

void BeamGeometry::validate() const {
  require(eps > 0.0, ErrorCode::BadConfig, "eps must be positive");
  require(r_eps > 0.0 && r_eps <= 1.0, ErrorCode::BadConfig,
          "r_eps must lie in (0, 1]");
  require(t_eps >= 0.0 && t_eps < 1.0, ErrorCode::BadConfig,
          "t_eps must lie in [0, 1)");
  require(section.extent > 0.0, ErrorCode::BadConfig,
          "cross-section extent must be positive");
}

double EpsFamily::r_of(double eps) const {
  return r_rule.coef * std::pow(eps, r_rule.power);
}

double EpsFamily::t_of(double eps) const {
  double base = (t_rule.base == PowerRule::Base::R) ? r_of(eps) : eps;
  return t_rule.coef * std::pow(base, t_rule.power);
}

void EpsFamily::validate() const {
  require(r_rule.base == PowerRule::Base::Eps, ErrorCode::BadConfig,
          "r rule must be a power of eps");
  require(eps_list.size() >= 2, ErrorCode::SweepTooShort,
          "eps_list needs at least 2 entries");
  for (size_t i = 0; i < eps_list.size(); ++i) {
    require(eps_list[i] > 0.0, ErrorCode::BadConfig, "eps must be positive");
    if (i > 0)
      require(eps_list[i] < eps_list[i - 1], ErrorCode::BadConfig,
              "eps_list must be strictly decreasing");
    double r = r_of(eps_list[i]);
    double t = t_of(eps_list[i]);
    require(r > 0.0 && r <= 1.0, ErrorCode::BadConfig,
            "family r leaves (0, 1] on eps_list");
    require(t >= 0.0 && t < 1.0, ErrorCode::BadConfig,
            "family t leaves [0, 1) on eps_list");
  }
  // The neck has to shrink along the sweep.
  for (size_t i = 1; i < eps_list.size(); ++i) {
    require(r_of(eps_list[i]) <= r_of(eps_list[i - 1]) * (1.0 + 1e-12),
            ErrorCode::BadConfig, "family r must not grow along the sweep");
    require(t_of(eps_list[i]) <= t_of(eps_list[i - 1]) * (1.0 + 1e-12),
            ErrorCode::BadConfig, "family t must not grow along the sweep");
  }
}

namespace {

// Limit of a positive sequence q(eps) as eps -> 0, from its trailing values.
double sequence_limit(const std::vector<double>& eps,
                      const std::vector<double>& q, double tol,
                      const char* name) {
  size_t n = q.size();
  // Oscillation guard: a rise and a fall both exceeding tol (relative to the
  // local scale) means the limit is not numerically resolved.
  bool rose = false, fell = false;
  for (size_t i = 0; i + 1 < n; ++i) {
    double scale = std::max(1.0, std::abs(q[i]));
    if (q[i + 1] - q[i] > tol * scale) rose = true;
    if (q[i] - q[i + 1] > tol * scale) fell = true;
  }
  require(!(rose && fell), ErrorCode::NonMonotone,
          std::string(name) + " ratio oscillates along eps_list");

  double last = q[n - 1], prev = q[n - 2];
  if (last < tol) return 0.0;
  if (last > 1.0 / tol) return kInf;
  if (std::abs(last - prev) <= tol * std::max(1.0, std::abs(last)))
    return last;  // stationary
  // Power-law trend q ~ C eps^alpha from the last two entries.
  double alpha = std::log(last / prev) / std::log(eps[n - 1] / eps[n - 2]);
  constexpr double kAlphaMin = 0.1;
  if (alpha >= kAlphaMin) return 0.0;
  if (alpha <= -kAlphaMin) return kInf;
  return last;
}

}  // namespace

Regime classify_regime(const EpsFamily& family, double tol) {
  family.validate();
  const auto& eps = family.eps_list;
  std::vector<double> q_mu(eps.size()), q_nu(eps.size());
  for (size_t i = 0; i < eps.size(); ++i) {
    double r = family.r_of(eps[i]);
    q_mu[i] = family.t_of(eps[i]) / (r * r);
    q_nu[i] = eps[i] / r;
  }
  Regime regime;
  regime.mu = sequence_limit(eps, q_mu, tol, "t/r^2");
  regime.nu = sequence_limit(eps, q_nu, tol, "eps/r");
  if (regime.mu > 0.0 && std::isfinite(regime.mu) && regime.nu == 0.0)
    regime.case_tag = RegimeCase::CaseA;
  else if (std::isinf(regime.mu) && regime.nu > 0.0 &&
           std::isfinite(regime.nu))
    regime.case_tag = RegimeCase::CaseB;
  else
    regime.case_tag = RegimeCase::Other;
  return regime;
}

BeamGeometry geometry_at(const EpsFamily& family, double eps,
                         const CrossSection& section) {
  BeamGeometry g;
  g.eps = eps;
  g.r_eps = family.r_of(eps);
  g.t_eps = family.t_of(eps);
  g.section = section;
  g.validate();
  return g;
}

bool inside_beam(const BeamGeometry& g, const Vec3& x) {
  if (std::abs(x[0]) > 1.0 + kMemberTol) return false;
  // Strictly interior to the notch interval the section is eps*r*S; at and
  // beyond the interface planes the closure of the outer parts applies.
  double scale =
      (std::abs(x[0]) < g.t_eps - kMemberTol) ? g.eps * g.r_eps : g.eps;
  return g.section.contains(x[1] / scale, x[2] / scale);
}

SubdomainTag subdomain_of(const BeamGeometry& g, double x1) {
  if (std::abs(x1) <= g.t_eps) return SubdomainTag::OmegaZero;
  return x1 < 0.0 ? SubdomainTag::OmegaMinus : SubdomainTag::OmegaPlus;
}

double measure_omega(const BeamGeometry& g) {
  double a = g.section.area();
  return 2.0 * (1.0 - g.t_eps) * g.eps * g.eps * a +
         2.0 * g.t_eps * g.eps * g.eps * g.r_eps * g.r_eps * a;
}

Vec3 map_y(const BeamGeometry& g, const Vec3& x) {
  require(inside_beam(g, x), ErrorCode::OutsideDomain,
          "map_y: point " + fmt_point(x) + " is outside the beam");
  return {x[0], x[1] / g.eps, x[2] / g.eps};
}

Vec3 map_y_inv(const BeamGeometry& g, const Vec3& y) {
  Vec3 x{y[0], y[1] * g.eps, y[2] * g.eps};
  require(inside_beam(g, x), ErrorCode::OutsideDomain,
          "map_y_inv: image " + fmt_point(x) + " is outside the beam");
  return x;
}

namespace {

double z1_of_x1(const BeamGeometry& g, double mu, double x1) {
  double t = g.t_eps, r = g.r_eps, e = g.eps;
  if (mu == 0.0) {
    if (x1 < -t) return (x1 + t) / (e * r) - t / (r * r);
    if (x1 > t) return (x1 - t) / (e * r) + t / (r * r);
    return x1 / (r * r);
  }
  double outer = mu * r / (e * t);
  if (x1 < -t) return outer * (x1 + t) - mu;
  if (x1 > t) return outer * (x1 - t) + mu;
  return mu * x1 / t;
}

double x1_of_z1(const BeamGeometry& g, double mu, double z1) {
  double t = g.t_eps, r = g.r_eps, e = g.eps;
  if (mu == 0.0) {
    double edge = t / (r * r);
    if (z1 < -edge) return -t + (z1 + edge) * e * r;
    if (z1 > edge) return t + (z1 - edge) * e * r;
    return z1 * r * r;
  }
  double outer = mu * r / (e * t);
  if (z1 < -mu) return -t + (z1 + mu) / outer;
  if (z1 > mu) return t + (z1 - mu) / outer;
  return z1 * t / mu;
}

void check_z_regime(const BeamGeometry& g, const Regime& regime) {
  require(std::isfinite(regime.mu), ErrorCode::UnsupportedRegime,
          "z-frame is undefined for mu = +inf");
  require(regime.mu >= 0.0, ErrorCode::BadConfig, "mu must be nonnegative");
  require(g.t_eps > 0.0, ErrorCode::BadConfig,
          "z-frame needs a nondegenerate notch (t_eps > 0)");
}

}  // namespace

Vec3 map_z(const BeamGeometry& g, const Regime& regime, const Vec3& x) {
  check_z_regime(g, regime);
  require(inside_beam(g, x), ErrorCode::OutsideDomain,
          "map_z: point " + fmt_point(x) + " is outside the beam");
  double s = g.eps * g.r_eps;
  return {z1_of_x1(g, regime.mu, x[0]), x[1] / s, x[2] / s};
}

Vec3 map_z_inv(const BeamGeometry& g, const Regime& regime, const Vec3& z) {
  check_z_regime(g, regime);
  double s = g.eps * g.r_eps;
  Vec3 x{x1_of_z1(g, regime.mu, z[0]), z[1] * s, z[2] * s};
  require(inside_beam(g, x), ErrorCode::OutsideDomain,
          "map_z_inv: image " + fmt_point(x) + " is outside the beam");
  return x;
}

}  // namespace nbvi
