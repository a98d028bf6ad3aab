#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssctm/errors.hpp"

namespace ssctm {

/// Static parameters of one mainline cell (triangular fundamental diagram).
struct CellParams {
    double length_km = 0.0;                 // l_k
    double free_flow_speed_kmh = 0.0;       // v_k
    double congestion_wave_speed_kmh = 0.0; // w_k
    double jam_density_veh_per_km = 0.0;    // n_k^jam
    double mainline_ratio = 0.0;            // beta_k, fraction continuing to cell k+1
};

/// One buffer: infinite queue feeding a cell. Buffer 1 is the upstream
/// mainline, buffers 2..K are on-ramps.
struct BufferParams {
    double capacity_veh_per_hr = 0.0; // U_k
    double demand_veh_per_hr = 0.0;   // alpha_k in [0, U_k]
};

struct HighwayConfig {
    std::vector<CellParams> cells;
    std::vector<BufferParams> buffers;

    int num_cells() const { return static_cast<int>(cells.size()); }
};

/// Mode-switching capacities. Mode s assigns capacity F_{k,s} to every cell
/// simultaneously; modes switch with rates lambda_{s,s'} (zero diagonal).
struct MarkovCapacityModel {
    int mode_count = 0;
    // capacities[s][k] = F_{k,s}, s in 0..m-1, k in 0..K-1
    std::vector<std::vector<double>> capacities;
    // transition_rates_per_hr[s][s'], zero diagonal
    std::vector<std::vector<double>> transition_rates_per_hr;

    double capacity(int cell, int mode) const { return capacities[mode][cell]; }
    double max_capacity(int cell) const;
    double min_capacity(int cell) const;
};

/// (mode, queue vector, density vector) at an instant. Mode is 1-based to
/// match the usual numbering of modes.
struct HybridState {
    int mode = 1;
    std::vector<double> queues_veh;
    std::vector<double> densities_veh_per_km;
};

/// Affine ramp metering mu_k(n) = u_k - kappa_k n_k for ramps k = 2..K.
/// Entries are stored for ramps 2..K, i.e. u_veh_per_hr[0] belongs to ramp 2.
struct AffineControlPolicy {
    std::vector<double> u_veh_per_hr;
    std::vector<double> kappa_kmh;
};

/// Density boundaries of the invariant set, one value per cell.
///   lower_no_queue   : lower bound when buffer k holds no queue
///   lower_with_queue : lower bound when buffer k holds a queue
///   upper_free       : upper bound absent downstream congestion
///   upper_blocked    : upper bound when blocked from downstream
/// For the last cell upper_blocked equals upper_free (nothing downstream).
struct DensityBounds {
    std::vector<double> lower_no_queue;
    std::vector<double> lower_with_queue;
    std::vector<double> upper_free;
    std::vector<double> upper_blocked;
};

/// Validates all type invariants; throws ValidationError naming the field.
void validate(const HighwayConfig& cfg);
void validate(const HighwayConfig& cfg, const MarkovCapacityModel& markov);
void validate_state(const HighwayConfig& cfg, const HybridState& state, int mode_count);
void validate_policy(const HighwayConfig& cfg, const AffineControlPolicy& policy);

/// Nominal critical density F_k^max / v_k.
double critical_density(const HighwayConfig& cfg, const MarkovCapacityModel& markov, int cell);

/// True if the directed graph of positive transition rates is strongly
/// connected (single mode counts as irreducible).
bool chain_irreducible(const MarkovCapacityModel& markov);

}  // namespace ssctm
