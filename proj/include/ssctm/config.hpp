#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssctm/simulator.hpp"
#include "ssctm/types.hpp"

namespace ssctm {

/// Everything a config file can carry. Sections [highway], [buffers] and
/// [markov] are required; [policy], [baseline] and [sim] are optional.
struct LoadedConfig {
    HighwayConfig highway;
    MarkovCapacityModel markov;
    std::optional<AffineControlPolicy> policy;
    std::optional<AlineaSpec> alinea;
    std::optional<MetalineSpec> metaline;
    SimConfig sim;
    bool has_sim = false;
    std::vector<bool> metered;    // per ramp; defaults to "has demand"
    double sim_start_hr = 0.0;    // label for hourly outputs
};

LoadedConfig parse_config(const std::string& text);

/// Highway with per-buffer demand replaced by its peak over the schedule;
/// designs target the binding regime.
HighwayConfig peak_demand_highway(const LoadedConfig& cfg);
LoadedConfig load_config(const std::string& path);
std::string write_config(const LoadedConfig& cfg);

}  // namespace ssctm
