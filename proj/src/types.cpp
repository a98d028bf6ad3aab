#include "ssctm/types.hpp"

#include <algorithm>
#include <cmath>

namespace ssctm {

double MarkovCapacityModel::max_capacity(int cell) const {
    double f = capacities[0][cell];
    for (int s = 1; s < mode_count; ++s) f = std::max(f, capacities[s][cell]);
    return f;
}

double MarkovCapacityModel::min_capacity(int cell) const {
    double f = capacities[0][cell];
    for (int s = 1; s < mode_count; ++s) f = std::min(f, capacities[s][cell]);
    return f;
}

namespace {

std::string cell_field(int k, const char* name) {
    return "cells[" + std::to_string(k + 1) + "]." + name;
}

void require(bool ok, const std::string& field, const std::string& reason) {
    if (!ok) throw ValidationError(field, reason);
}

}  // namespace

void validate(const HighwayConfig& cfg) {
    const int K = cfg.num_cells();
    require(K >= 1, "cells", "at least one cell required");
    require(static_cast<int>(cfg.buffers.size()) == K, "buffers",
            "cells and buffers must have equal length");
    for (int k = 0; k < K; ++k) {
        const CellParams& c = cfg.cells[k];
        require(c.length_km > 0, cell_field(k, "l"), "must be > 0");
        require(c.free_flow_speed_kmh > 0, cell_field(k, "v"), "must be > 0");
        require(c.congestion_wave_speed_kmh > 0, cell_field(k, "w"), "must be > 0");
        require(c.jam_density_veh_per_km > 0, cell_field(k, "n_jam"), "must be > 0");
        require(c.mainline_ratio >= 0 && c.mainline_ratio <= 1, cell_field(k, "beta"),
                "must be in [0, 1]");
        if (k == K - 1) {
            require(c.mainline_ratio == 0, cell_field(k, "beta"),
                    "last cell must have beta = 0");
        } else {
            require(c.mainline_ratio > 0, cell_field(k, "beta"),
                    "interior cells must have beta > 0");
        }
        const BufferParams& b = cfg.buffers[k];
        require(b.capacity_veh_per_hr > 0, "buffers[" + std::to_string(k + 1) + "].U",
                "must be > 0");
        require(b.demand_veh_per_hr >= 0 && b.demand_veh_per_hr <= b.capacity_veh_per_hr,
                "buffers[" + std::to_string(k + 1) + "].alpha", "must be in [0, U]");
    }
}

void validate(const HighwayConfig& cfg, const MarkovCapacityModel& markov) {
    validate(cfg);
    const int K = cfg.num_cells();
    const int m = markov.mode_count;
    require(m >= 1, "markov.mode_count", "must be >= 1");
    require(static_cast<int>(markov.capacities.size()) == m, "markov.capacity",
            "expected one capacity row per mode");
    for (int s = 0; s < m; ++s) {
        require(static_cast<int>(markov.capacities[s].size()) == K,
                "markov.capacity[" + std::to_string(s + 1) + "]",
                "expected " + std::to_string(K) + " entries");
        for (int k = 0; k < K; ++k)
            require(markov.capacities[s][k] > 0,
                    "markov.capacity[" + std::to_string(s + 1) + "][" + std::to_string(k + 1) + "]",
                    "must be > 0");
    }
    require(static_cast<int>(markov.transition_rates_per_hr.size()) == m, "markov.rate",
            "expected m rate rows");
    for (int s = 0; s < m; ++s) {
        require(static_cast<int>(markov.transition_rates_per_hr[s].size()) == m,
                "markov.rate[" + std::to_string(s + 1) + "]", "expected m entries");
        require(markov.transition_rates_per_hr[s][s] == 0,
                "markov.rate[" + std::to_string(s + 1) + "]", "diagonal must be zero");
        for (int t = 0; t < m; ++t)
            require(markov.transition_rates_per_hr[s][t] >= 0,
                    "markov.rate[" + std::to_string(s + 1) + "][" + std::to_string(t + 1) + "]",
                    "must be >= 0");
    }
    require(chain_irreducible(markov), "markov.rate", "mode chain must be irreducible");

    // Fundamental-diagram condition at the nominal critical density. Holding
    // at F_k^max implies it holds for every mode.
    for (int k = 0; k < K; ++k) {
        const CellParams& c = cfg.cells[k];
        const double nc = markov.max_capacity(k) / c.free_flow_speed_kmh;
        require(c.free_flow_speed_kmh * nc <=
                    c.congestion_wave_speed_kmh * (c.jam_density_veh_per_km - nc) + 1e-9,
                cell_field(k, "n_jam"),
                "fundamental diagram violated: v*n_c must not exceed w*(n_jam - n_c)");
    }
}

void validate_state(const HighwayConfig& cfg, const HybridState& state, int mode_count) {
    const int K = cfg.num_cells();
    require(state.mode >= 1 && state.mode <= mode_count, "state.mode", "out of range");
    require(static_cast<int>(state.queues_veh.size()) == K, "state.q", "wrong length");
    require(static_cast<int>(state.densities_veh_per_km.size()) == K, "state.n", "wrong length");
    for (int k = 0; k < K; ++k) {
        require(state.queues_veh[k] >= 0, "state.q[" + std::to_string(k + 1) + "]",
                "must be >= 0");
        require(state.densities_veh_per_km[k] >= 0 &&
                    state.densities_veh_per_km[k] <= cfg.cells[k].jam_density_veh_per_km,
                "state.n[" + std::to_string(k + 1) + "]", "must be in [0, n_jam]");
    }
}

void validate_policy(const HighwayConfig& cfg, const AffineControlPolicy& policy) {
    const int K = cfg.num_cells();
    require(static_cast<int>(policy.u_veh_per_hr.size()) == K - 1, "policy.u",
            "expected K-1 entries");
    require(static_cast<int>(policy.kappa_kmh.size()) == K - 1, "policy.kappa",
            "expected K-1 entries");
    for (int i = 0; i < K - 1; ++i) {
        require(policy.u_veh_per_hr[i] > 0, "policy.u[" + std::to_string(i + 2) + "]",
                "must be > 0");
        require(policy.kappa_kmh[i] > 0, "policy.kappa[" + std::to_string(i + 2) + "]",
                "must be > 0");
    }
}

double critical_density(const HighwayConfig& cfg, const MarkovCapacityModel& markov, int cell) {
    return markov.max_capacity(cell) / cfg.cells[cell].free_flow_speed_kmh;
}

bool chain_irreducible(const MarkovCapacityModel& markov) {
    const int m = markov.mode_count;
    if (m <= 1) return true;
    auto reach_all = [&](bool transpose) {
        std::vector<char> seen(m, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            const int s = stack.back();
            stack.pop_back();
            for (int t = 0; t < m; ++t) {
                const double rate = transpose ? markov.transition_rates_per_hr[t][s]
                                              : markov.transition_rates_per_hr[s][t];
                if (rate > 0 && !seen[t]) {
                    seen[t] = 1;
                    ++count;
                    stack.push_back(t);
                }
            }
        }
        return count == m;
    };
    return reach_all(false) && reach_all(true);
}

}  // namespace ssctm
