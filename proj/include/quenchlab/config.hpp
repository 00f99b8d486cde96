#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "quenchlab/experiments.hpp"
#include "quenchlab/stochastic.hpp"

namespace quenchlab {

inline constexpr const char* kConfigVersion = "quenchlab-config-1";

/// Flat `key = value` configuration. Every key has a default; the resolved
/// text (all keys, sorted) is what gets hashed and embedded in outputs.
struct RunConfig {
    std::string version = kConfigVersion;
    std::uint64_t seed = 1;

    GridConfig grid;

    std::string flow_kind = "zero";  ///< zero | sine | constant | shear | cellular
    double flow_amplitude = 1.0;
    double flow_offset = 0.0;
    std::vector<Plateau> flow_plateaux;  ///< `center:half_width` pairs, comma separated
    std::size_t flow_cells = 32;

    std::string reaction_kind = "powerlaw";  ///< powerlaw | arrhenius | ignition | zero
    double reaction_c = 1.0;
    double reaction_p = 4.0;
    double reaction_M = 1.0;
    double reaction_theta = 1.0;
    double reaction_arr_c = 1.0;
    double reaction_theta0 = 0.25;

    InitSpec init;

    double horizon = 100.0;
    double snapshot_interval = 0.0;  ///< 0: final snapshot only
    double wallclock_seconds = 0.0;
    double cert_horizon = 0.0;

    Detectors detectors;  ///< certifier stays empty here

    bool cert_restart = false;
    std::string cert_trace;  ///< certify from an existing trace CSV instead of solving
    std::string cert_tail = "exact";  ///< exact | heuristic | none
    double cert_D = 0.0;              ///< 0: from the datum
    double cert_delta0 = 1.0;

    PathSamplerConfig mc;
    double mc_t = 1.0;
    double mc_x = 0.0;
    double mc_y = 0.0;
    double mc_eps = 0.5;
    double mc_start_y = 0.0;
    HistogramSpec mc_histogram;

    std::string sweep_param = "A";  ///< L | p | A | halfwidth
    std::vector<double> sweep_values;
    int sweep_bisection_steps = 6;
    double sweep_c = 1.0;
    double sweep_amplitude = 1.0;

    std::string out_dir;
};

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError
/// naming the key and line on unknown keys, bad values or violated limits.
RunConfig parse_config(std::string_view text);

/// Every key with its resolved value, sorted, one `key = value` per line.
std::string resolved_text(const RunConfig& config);

FlowProfile make_flow(const RunConfig& config);
ReactionSpec make_reaction(const RunConfig& config);
Scenario make_scenario(const RunConfig& config);

}  // namespace quenchlab
