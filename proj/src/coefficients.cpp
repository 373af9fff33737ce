#include "nbvi/coefficients.hpp"

#include <cmath>
#include <random>

namespace nbvi {

double Rational::eval(double eta) const {
  auto horner = [eta](const std::vector<double>& c) {
    double v = 0.0;
    for (size_t i = c.size(); i-- > 0;) v = v * eta + c[i];
    return v;
  };
  double d = horner(den);
  require(d != 0.0, ErrorCode::BadConfig,
          "rational state factor has a vanishing denominator");
  return horner(num) / d;
}

double SourceSpec::eval(double x1) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return amplitude;
    case Kind::Hat:
      return amplitude * (1.0 - std::abs(x1));
    case Kind::Sine:
      return amplitude * std::sin(wave * M_PI * x1);
  }
  return 0.0;
}

namespace {

Rational saturating_phi() {
  // 1 + eta^2/(1 + eta^2) = (1 + 2 eta^2) / (1 + eta^2)
  Rational r;
  r.num = {1.0, 0.0, 2.0};
  r.den = {1.0, 0.0, 1.0};
  return r;
}

}  // namespace

CoefficientSet make_identity() {
  CoefficientSet set;
  set.tag = FamilyTag::Identity;
  set.constants.C_growth = 1.0;
  return set;
}

CoefficientSet make_saturating() {
  CoefficientSet set;
  set.tag = FamilyTag::Saturating;
  set.outer.phi = saturating_phi();
  set.notch.phi = saturating_phi();
  set.constants.C_growth = 2.0;
  return set;
}

CoefficientSet make_anisotropic(double a_outer, double a_notch) {
  require(a_outer > 0.0 && a_notch > 0.0, ErrorCode::BadConfig,
          "anisotropy factors must be positive");
  CoefficientSet set = make_saturating();
  set.tag = FamilyTag::Anisotropic;
  set.outer.A = Eigen::Vector3d(1.0, a_outer, a_outer).asDiagonal();
  set.notch.A = Eigen::Vector3d(a_notch, 1.0, 1.0).asDiagonal();
  double amax = std::max({1.0, a_outer, a_notch});
  set.constants.C_growth = 2.0 * amax;
  // The coercivity floor follows the weakest diagonal entry (Phi >= 1).
  set.constants.C1 = std::min({1.0, a_outer, a_notch});
  return set;
}

CoefficientEval eval_branch(const CoefficientSet& set, int branch,
                            const Vec3& ref, double eta) {
  const BranchCoefficients& b = branch == 0 ? set.notch : set.outer;
  CoefficientEval out;
  out.A = b.A;
  out.B = b.B;
  out.Phi = b.phi.eval(eta) * b.Phi_mat;
  out.branch = branch == 0 ? 0 : 1;
  out.ref = ref;
  return out;
}

CoefficientEval eval_coeff(const CoefficientSet& set, const BeamGeometry& g,
                           const Vec3& x, double eta) {
  bool in_notch =
      g.t_eps > 0.0 && subdomain_of(g, x[0]) == SubdomainTag::OmegaZero;
  if (in_notch) {
    double s = g.eps * g.r_eps;
    return eval_branch(set, 0, {x[0] / g.t_eps, x[1] / s, x[2] / s}, eta);
  }
  return eval_branch(set, 1, {x[0], x[1] / g.eps, x[2] / g.eps}, eta);
}

namespace {

struct Probe {
  int branch;
  Vec3 ref;
  double eta;
  Vec3 xi, tau;
};

void update_worst(ConditionReport& rep, double margin, const Probe& p) {
  if (margin < rep.worst_margin) {
    rep.worst_margin = margin;
    rep.branch = p.branch;
    rep.ref = p.ref;
    rep.eta = p.eta;
    rep.xi = p.xi;
    rep.tau = p.tau;
  }
}

}  // namespace

ValidationReport validate_assumptions(const CoefficientSet& set,
                                      const AssumptionConstants& consts,
                                      int samples, std::uint64_t seed) {
  require(samples >= 0, ErrorCode::BadConfig, "sample count must be >= 0");
  require(consts.eta_max >= consts.eta_min, ErrorCode::BadConfig,
          "empty state range");

  std::vector<Probe> probes;
  // Deterministic corners: extreme states with xi = 0 expose any C2 > 0
  // coercivity defect exactly; axis directions at the radius bound stress
  // the growth constant.
  const double R = 10.0;
  for (int branch : {1, 0})
    for (double eta : {consts.eta_min, 0.0, consts.eta_max}) {
      std::vector<Vec3> dirs = {Vec3::Zero(), Vec3(R, 0, 0), Vec3(0, R, 0),
                                Vec3(0, 0, R),
                                Vec3(R, R, R) / std::sqrt(3.0)};
      for (const Vec3& xi : dirs)
        for (const Vec3& tau : {Vec3(Vec3::Zero()), Vec3(-xi)})
          probes.push_back({branch, Vec3::Zero(), eta, xi, tau});
    }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto rand_dir = [&]() {
    // Uniform direction via normal components.
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    double len = v.norm();
    return len > 0 ? Vec3(v / len) : Vec3(1, 0, 0);
  };
  for (int s = 0; s < samples; ++s) {
    Probe p;
    p.branch = u01(rng) < 0.5 ? 0 : 1;
    p.ref = {2.0 * u01(rng) - 1.0, 2.0 * u01(rng) - 1.0,
             2.0 * u01(rng) - 1.0};
    p.eta = consts.eta_min + (consts.eta_max - consts.eta_min) * u01(rng);
    p.xi = rand_dir() * (R * u01(rng));
    p.tau = rand_dir() * (R * u01(rng));
    probes.push_back(p);
  }

  ValidationReport rep;
  for (const Probe& p : probes) {
    CoefficientEval c = eval_branch(set, p.branch, p.ref, p.eta);
    Eigen::Matrix3d APhi = c.A * c.Phi;
    Eigen::Matrix3d K = APhi * c.B;

    double coer = p.xi.dot(K * p.xi) - consts.C1 * p.xi.squaredNorm() -
                  consts.C2 * std::pow(std::abs(p.eta), consts.q1) +
                  consts.k1_bound;
    update_worst(rep.coercivity, coer, p);

    double growth = consts.C_growth * p.xi.norm() +
                    consts.C_growth * std::abs(p.eta) + consts.alpha_bound -
                    (APhi * p.xi).norm();
    update_worst(rep.growth, growth, p);

    Vec3 d = p.xi - p.tau;
    update_worst(rep.monotonicity, d.dot(K * d), p);
  }

  constexpr double kMarginTol = -1e-10;
  rep.coercivity.pass = rep.coercivity.worst_margin >= kMarginTol;
  rep.growth.pass = rep.growth.worst_margin >= kMarginTol;
  rep.monotonicity.pass = rep.monotonicity.worst_margin >= kMarginTol;
  rep.samples = (int)probes.size();
  rep.pass = rep.coercivity.pass && rep.growth.pass && rep.monotonicity.pass;
  return rep;
}

}  // namespace nbvi
