#pragma once

// Flat experiment configuration files: one `key = value` per line, '#' starts
// a comment, lists are comma separated. Unknown or repeated keys are errors.
//
//   experiment = A
//   family = gaussian          # gaussian | gh | gh10 | mixture
//   rho = 0, 0.3, 0.8          # or kappa / gamma / parameters
//   sampling = linear          # linear | piecewise
//   estimators = Gaussian, copula, empirical-0.1, empirical-AICc-approx

#include <string>
#include <string_view>
#include <vector>

#include "depshap/experiment.hpp"

namespace depshap {

// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Throws SchemaError listing unknown keys or naming a malformed value, and
/// DomainError when the resulting configuration fails validation.
ExperimentConfig parse_experiment_config(std::string_view text);

// Inverse of parse_experiment_config for the keys it reads.
std::string format_experiment_config(const ExperimentConfig& config);

}  // namespace depshap
