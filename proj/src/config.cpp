#include "nbvi/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace nbvi {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::BadConfig, what);
}

double num(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  bad("config key '" + key + "' expects a number");
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad("config key '" + key + "' expects an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<int>() != 0;
  bad("config key '" + key + "' expects a boolean");
}

std::string str(const json& v, const std::string& key) {
  if (!v.is_string()) bad("config key '" + key + "' expects a string");
  return v.get<std::string>();
}

PowerRule::Base parse_base(const std::string& s, const std::string& key) {
  if (s == "eps") return PowerRule::Base::Eps;
  if (s == "r") return PowerRule::Base::R;
  bad("config key '" + key + "' expects 'eps' or 'r', got '" + s + "'");
}

void merge_rule(PowerRule& rule, const json& v, const std::string& key) {
  if (!v.is_object()) bad("config key '" + key + "' expects an object");
  for (const auto& [k, val] : v.items()) {
    if (k == "base")
      rule.base = parse_base(str(val, key + ".base"), key + ".base");
    else if (k == "coef")
      rule.coef = num(val, key + ".coef");
    else if (k == "power")
      rule.power = num(val, key + ".power");
    else
      bad("unknown config key '" + key + "." + k + "'");
  }
}

void merge_geometry(StudyConfig& cfg, const json& v) {
  for (const auto& [k, val] : v.items()) {
    if (k == "r_rule") {
      merge_rule(cfg.family.r_rule, val, "geometry.r_rule");
    } else if (k == "t_rule") {
      merge_rule(cfg.family.t_rule, val, "geometry.t_rule");
    } else if (k == "eps_list") {
      if (!val.is_array()) bad("config key 'geometry.eps_list' expects an array");
      cfg.family.eps_list.clear();
      for (const auto& e : val)
        cfg.family.eps_list.push_back(num(e, "geometry.eps_list"));
    } else if (k == "section") {
      for (const auto& [sk, sv] : val.items()) {
        if (sk == "kind") {
          std::string s = str(sv, "geometry.section.kind");
          if (s == "square")
            cfg.section.kind = CrossSection::Kind::SquareCentered;
          else if (s == "disk")
            cfg.section.kind = CrossSection::Kind::Disk;
          else
            bad("config key 'geometry.section.kind' expects 'square' or "
                "'disk', got '" + s + "'");
        } else if (sk == "extent") {
          cfg.section.extent = num(sv, "geometry.section.extent");
        } else {
          bad("unknown config key 'geometry.section." + sk + "'");
        }
      }
    } else {
      bad("unknown config key 'geometry." + k + "'");
    }
  }
}

void merge_coefficients(StudyConfig& cfg, const json& v) {
  // The family is rebuilt first so source/parameter keys apply on top.
  double a_outer = 2.0, a_notch = 0.5;
  if (auto it = v.find("a_outer"); it != v.end())
    a_outer = num(*it, "coefficients.a_outer");
  if (auto it = v.find("a_notch"); it != v.end())
    a_notch = num(*it, "coefficients.a_notch");
  if (auto it = v.find("family"); it != v.end()) {
    std::string s = str(*it, "coefficients.family");
    SourceSpec keep = cfg.set.source;
    if (s == "identity")
      cfg.set = make_identity();
    else if (s == "saturating")
      cfg.set = make_saturating();
    else if (s == "anisotropic")
      cfg.set = make_anisotropic(a_outer, a_notch);
    else
      bad("config key 'coefficients.family' expects 'identity', "
          "'saturating' or 'anisotropic', got '" + s + "'");
    cfg.set.source = keep;
  }
  for (const auto& [k, val] : v.items()) {
    if (k == "family" || k == "a_outer" || k == "a_notch") continue;
    if (k == "source") {
      for (const auto& [sk, sv] : val.items()) {
        if (sk == "kind") {
          std::string s = str(sv, "coefficients.source.kind");
          if (s == "zero")
            cfg.set.source.kind = SourceSpec::Kind::Zero;
          else if (s == "constant")
            cfg.set.source.kind = SourceSpec::Kind::Constant;
          else if (s == "hat")
            cfg.set.source.kind = SourceSpec::Kind::Hat;
          else if (s == "sine")
            cfg.set.source.kind = SourceSpec::Kind::Sine;
          else
            bad("config key 'coefficients.source.kind' expects 'zero', "
                "'constant', 'hat' or 'sine', got '" + s + "'");
        } else if (sk == "amplitude") {
          cfg.set.source.amplitude = num(sv, "coefficients.source.amplitude");
        } else if (sk == "wave") {
          cfg.set.source.wave = integer(sv, "coefficients.source.wave");
        } else {
          bad("unknown config key 'coefficients.source." + sk + "'");
        }
      }
    } else {
      bad("unknown config key 'coefficients." + k + "'");
    }
  }
}

void merge_feasible(StudyConfig& cfg, const json& v) {
  for (const auto& [k, val] : v.items()) {
    if (k == "kind") {
      std::string s = str(val, "feasible_set.kind");
      if (s == "unconstrained")
        cfg.feas.kind = FeasibleSetSpec::Kind::Unconstrained;
      else if (s == "nonnegative")
        cfg.feas.kind = FeasibleSetSpec::Kind::Nonnegative;
      else if (s == "lower_obstacle")
        cfg.feas.kind = FeasibleSetSpec::Kind::LowerObstacle;
      else
        bad("config key 'feasible_set.kind' expects 'unconstrained', "
            "'nonnegative' or 'lower_obstacle', got '" + s + "'");
    } else if (k == "offset") {
      cfg.feas.offset = num(val, "feasible_set.offset");
    } else if (k == "curvature") {
      cfg.feas.curvature = num(val, "feasible_set.curvature");
    } else {
      bad("unknown config key 'feasible_set." + k + "'");
    }
  }
}

void merge_mesh(StudyConfig& cfg, const json& v) {
  for (const auto& [k, val] : v.items()) {
    if (k == "n_cross")
      cfg.mesh.n_cross = integer(val, "mesh.n_cross");
    else if (k == "n_axial")
      cfg.mesh.n_axial = integer(val, "mesh.n_axial");
    else if (k == "notch_refine")
      cfg.mesh.notch_refine = integer(val, "mesh.notch_refine");
    else if (k == "dof_budget")
      cfg.mesh.dof_budget = integer(val, "mesh.dof_budget");
    else if (k == "h_1d")
      cfg.mesh.h_1d = num(val, "mesh.h_1d");
    else if (k == "limit_n_cross")
      cfg.mesh.limit_n_cross = integer(val, "mesh.limit_n_cross");
    else if (k == "n_block_axial")
      cfg.mesh.n_block_axial = integer(val, "mesh.n_block_axial");
    else
      bad("unknown config key 'mesh." + k + "'");
  }
}

void merge_solver(StudyConfig& cfg, const json& v) {
  for (const auto& [k, val] : v.items()) {
    if (k == "omega")
      cfg.solver.omega = num(val, "solver.omega");
    else if (k == "tol")
      cfg.solver.tol = num(val, "solver.tol");
    else if (k == "max_iter")
      cfg.solver.max_iter = integer(val, "solver.max_iter");
    else if (k == "verify_spd")
      cfg.solver.verify_spd = boolean(val, "solver.verify_spd");
    else if (k == "damping")
      cfg.solver.damping = num(val, "solver.damping");
    else if (k == "tol_outer")
      cfg.solver.tol_outer = num(val, "solver.tol_outer");
    else if (k == "max_outer")
      cfg.solver.max_outer = integer(val, "solver.max_outer");
    else
      bad("unknown config key 'solver." + k + "'");
  }
}

void merge_study(StudyConfig& cfg, const json& v) {
  for (const auto& [k, val] : v.items()) {
    if (k == "ball_radius")
      cfg.ball_radius = num(val, "study.ball_radius");
    else if (k == "energy_ratio")
      cfg.tol.energy_ratio = num(val, "study.energy_ratio");
    else if (k == "sigma0_ratio")
      cfg.tol.sigma0_ratio = num(val, "study.sigma0_ratio");
    else if (k == "slack")
      cfg.tol.slack = num(val, "study.slack");
    else if (k == "final_ratio")
      cfg.tol.final_ratio = num(val, "study.final_ratio");
    else if (k == "trivial_eps")
      cfg.tol.trivial_eps = num(val, "study.trivial_eps");
    else if (k == "seed") {
      if (!val.is_number_integer()) bad("config key 'study.seed' expects an integer");
      cfg.seed = val.get<std::uint64_t>();
    }
    else if (k == "threads")
      cfg.threads = integer(val, "study.threads");
    else
      bad("unknown config key 'study." + k + "'");
  }
}

void merge_into(StudyConfig& cfg, const json& root) {
  if (!root.is_object()) bad("config root must be a JSON object");
  for (const auto& [k, val] : root.items()) {
    if (k == "geometry")
      merge_geometry(cfg, val);
    else if (k == "coefficients")
      merge_coefficients(cfg, val);
    else if (k == "feasible_set")
      merge_feasible(cfg, val);
    else if (k == "mesh")
      merge_mesh(cfg, val);
    else if (k == "solver")
      merge_solver(cfg, val);
    else if (k == "study")
      merge_study(cfg, val);
    else
      bad("unknown config section '" + k + "'");
  }
}

}  // namespace

StudyConfig default_config() {
  StudyConfig cfg;
  cfg.family.r_rule = {PowerRule::Base::Eps, 1.0, 2.0 / 3.0};
  cfg.family.t_rule = {PowerRule::Base::R, 1.0, 2.0};
  cfg.family.eps_list = {0.25, 0.125, 0.0625, 0.03125};
  cfg.section = CrossSection{};
  cfg.set = make_saturating();
  cfg.set.source = {SourceSpec::Kind::Hat, 4.0, 1};
  cfg.feas.kind = FeasibleSetSpec::Kind::Nonnegative;
  return cfg;
}

StudyConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const std::exception& e) {
    bad(std::string("config does not parse as JSON: ") + e.what());
  }
  // A study report embeds the resolved config it ran with; accept it
  // directly so a run can be reproduced from its own output file.
  if (root.is_object() && root.contains("rows") && root.contains("config") &&
      root["config"].is_object())
    root = root["config"];
  StudyConfig cfg = default_config();
  merge_into(cfg, root);
  return cfg;
}

StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::BadConfig,
          "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(StudyConfig& cfg, const std::string& spec) {
  auto eq = spec.find('=');
  require(eq != std::string::npos && eq > 0, ErrorCode::BadConfig,
          "override '" + spec + "' is not of the form key=value");
  std::string path = spec.substr(0, eq);
  std::string value = spec.substr(eq + 1);

  json leaf;
  try {
    leaf = json::parse(value);
  } catch (const std::exception&) {
    leaf = value;  // bare strings like `sine` pass through
  }

  // Wrap the leaf in nested objects along the dotted path and merge.
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    parts.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (size_t i = parts.size(); i-- > 0;) {
    require(!parts[i].empty(), ErrorCode::BadConfig,
            "override key '" + path + "' has an empty component");
    json wrap;
    wrap[parts[i]] = leaf;
    leaf = std::move(wrap);
  }
  merge_into(cfg, leaf);
}

nlohmann::ordered_json config_to_json(const StudyConfig& cfg) {
  auto base_name = [](PowerRule::Base b) {
    return b == PowerRule::Base::Eps ? "eps" : "r";
  };
  auto rule = [&](const PowerRule& r) {
    return json{{"base", base_name(r.base)},
                {"coef", r.coef},
                {"power", r.power}};
  };
  const char* family = "custom";
  switch (cfg.set.tag) {
    case FamilyTag::Identity: family = "identity"; break;
    case FamilyTag::Saturating: family = "saturating"; break;
    case FamilyTag::Anisotropic: family = "anisotropic"; break;
    default: break;
  }
  const char* source = "zero";
  switch (cfg.set.source.kind) {
    case SourceSpec::Kind::Constant: source = "constant"; break;
    case SourceSpec::Kind::Hat: source = "hat"; break;
    case SourceSpec::Kind::Sine: source = "sine"; break;
    default: break;
  }
  const char* feas = "unconstrained";
  switch (cfg.feas.kind) {
    case FeasibleSetSpec::Kind::Nonnegative: feas = "nonnegative"; break;
    case FeasibleSetSpec::Kind::LowerObstacle: feas = "lower_obstacle"; break;
    default: break;
  }

  json j;
  j["geometry"] = {
      {"r_rule", rule(cfg.family.r_rule)},
      {"t_rule", rule(cfg.family.t_rule)},
      {"eps_list", cfg.family.eps_list},
      {"section",
       {{"kind",
         cfg.section.kind == CrossSection::Kind::Disk ? "disk" : "square"},
        {"extent", cfg.section.extent}}}};
  j["coefficients"] = {{"family", family},
                       {"source",
                        {{"kind", source},
                         {"amplitude", cfg.set.source.amplitude},
                         {"wave", cfg.set.source.wave}}}};
  j["feasible_set"] = {{"kind", feas},
                       {"offset", cfg.feas.offset},
                       {"curvature", cfg.feas.curvature}};
  j["mesh"] = {{"n_cross", cfg.mesh.n_cross},
               {"n_axial", cfg.mesh.n_axial},
               {"notch_refine", cfg.mesh.notch_refine},
               {"dof_budget", cfg.mesh.dof_budget},
               {"h_1d", cfg.mesh.h_1d},
               {"limit_n_cross", cfg.mesh.limit_n_cross},
               {"n_block_axial", cfg.mesh.n_block_axial}};
  j["solver"] = {{"omega", cfg.solver.omega},
                 {"tol", cfg.solver.tol},
                 {"max_iter", cfg.solver.max_iter},
                 {"verify_spd", cfg.solver.verify_spd},
                 {"damping", cfg.solver.damping},
                 {"tol_outer", cfg.solver.tol_outer},
                 {"max_outer", cfg.solver.max_outer}};
  j["study"] = {{"ball_radius", cfg.ball_radius},
                {"energy_ratio", cfg.tol.energy_ratio},
                {"sigma0_ratio", cfg.tol.sigma0_ratio},
                {"slack", cfg.tol.slack},
                {"final_ratio", cfg.tol.final_ratio},
                {"trivial_eps", cfg.tol.trivial_eps},
                {"seed", cfg.seed},
                {"threads", cfg.threads}};
  return j;
}

}  // namespace nbvi
