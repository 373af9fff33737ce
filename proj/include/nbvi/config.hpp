#pragma once

#include <string>

#include "json.hpp"
#include "nbvi/study.hpp"

namespace nbvi {

// Defaults reproduce the reference sweep: square section of half-width 1/2,
// r = eps^(2/3), t = r^2 (mu = 1), saturating coefficients, hat load of
// height 4, nonnegativity constraint, eps halving from 1/4 to 1/32.
StudyConfig default_config();

// Starts from the defaults and overrides whatever the JSON text provides.
// Sections and keys are optional; unknown ones throw BadConfig by name.
StudyConfig parse_config(const std::string& text);
StudyConfig load_config(const std::string& path);

// One dotted override, e.g. "solver.tol=1e-8" or
// "coefficients.source.kind=sine"; the value is parsed as JSON when it
// scans, otherwise taken as a bare string.
void apply_override(StudyConfig& cfg, const std::string& spec);

// Fully-resolved config in the file schema; reports embed this.
nlohmann::ordered_json config_to_json(const StudyConfig& cfg);

}  // namespace nbvi
