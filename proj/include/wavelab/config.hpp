#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavelab/common.hpp"

namespace wavelab {

/// Flat sectioned key-value run configuration. Unknown sections or keys are
/// rejected at parse time; cross-field feasibility (T > T*, tau in range,
/// gamma window) is checked by validate_config before any solve.
struct RunConfig {
    // [metric]
    std::string metric_name = "identity";
    std::vector<double> metric_params;
    // [weight]
    std::string weight_name = "shifted-square";
    std::vector<double> weight_params = {1.0};
    // [mesh]
    double r0 = 1.0;
    double R = 2.0;
    int n_r = 24;
    int n_theta = 48;
    // [time]
    double T = 2.0;
    int n_t = 128;
    double tau = 0.25;
    // [carleman]
    std::string gamma_rule = "midpoint";  // midpoint | near-delta | explicit
    double gamma_explicit = 0.0;
    int s_count = 25;
    int corpus_size = 20;
    // [family]
    int family_count = 8;
    // [inverse]
    double reg_lambda = 1e-6;
    int max_iter = 150;
    std::vector<double> noise_levels = {0.001, 0.01};
    int refine = 2;
    // [run]
    std::uint64_t seed = 2026;
    std::string out_dir = "out";
};

RunConfig parse_config_string(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Canonical text form; re-parsing the echo yields an equivalent RunConfig.
std::string config_echo(const RunConfig& cfg);

/// FNV-1a hash of the canonical echo; stamped into every report.
std::uint64_t config_hash(const RunConfig& cfg);

/// Throws FeasibilityError / ConfigError naming the violated condition.
void validate_config(const RunConfig& cfg);

}  // namespace wavelab
