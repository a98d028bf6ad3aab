#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ssctm/sim/batch.hpp"
#include "ssctm/types.hpp"

namespace ssctm {

struct DemandStep {
    int64_t start_step = 0;
    std::vector<double> alpha;  // size K
};

struct SimConfig {
    double dt_hr = 1.0 / 360.0;  // 10 s
    int64_t horizon_steps = 0;
    uint64_t seed = 0;
    std::optional<double> queue_cap_veh_per_lane;
    std::vector<double> lanes_per_ramp;  // size K when present, else 1 per ramp
    HybridState initial_state;
    std::vector<DemandStep> demand_schedule;  // sorted; empty = constant demand
    // Metering window in steps; meters run unrestricted when unset.
    std::optional<int64_t> control_start_step;
    std::optional<int64_t> control_end_step;
};

void validate_sim(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                  const SimConfig& sim);

/// Per-step records in flat row-major layout. states row t is the state
/// after step t (row 0 is the initial state); flows row t-1 holds the flows
/// applied during step t.
struct Trajectory {
    int K = 0;
    double dt_hr = 0.0;
    std::vector<int> modes;         // T+1
    std::vector<double> queues;     // (T+1) x K
    std::vector<double> densities;  // (T+1) x K
    std::vector<double> inflows;    // T x K
    std::vector<double> outflows;   // T x K

    int64_t steps() const { return static_cast<int64_t>(modes.size()) - 1; }
    HybridState state_at(int64_t t) const;
};

struct HourlyMetric {
    double queue_mean = 0.0;  // mean total queue over the hour's steps
    double vht = 0.0;         // vehicle-hours accumulated in the hour
};

struct Metrics {
    double time_avg_queue_veh = 0.0;
    double vht_veh_hr = 0.0;
    std::vector<HourlyMetric> per_hour;
};

struct AlineaSpec {
    double gain = 40.0;  // km/h acting on total density error
    double period_s = 10.0;
    std::vector<double> n_crit;  // size K; defaults to F^max / v
};

struct MetalineSpec {
    std::vector<std::vector<double>> KP;  // (K-1) x K
    std::vector<std::vector<double>> KI;  // (K-1) x K
    std::vector<double> n_crit;           // size K
    double period_s = 10.0;
};

struct Strategy {
    enum Kind { NoControl, Affine, Alinea, Metaline } kind = NoControl;
    AffineControlPolicy policy;  // Affine
    AlineaSpec alinea;
    MetalineSpec metaline;
    // Ramps that are metered at all (default: every ramp with demand).
    std::vector<bool> metered;  // size K-1 when present

    static Strategy none() { return Strategy{}; }
    static Strategy affine(AffineControlPolicy p) {
        Strategy s;
        s.kind = Affine;
        s.policy = std::move(p);
        return s;
    }
};

/// One deterministic run; trajectory is fully recorded. The seed in sim
/// identifies the splitmix64 stream driving mode switches.
Trajectory simulate(const Strategy& strategy, const HighwayConfig& cfg,
                    const MarkovCapacityModel& markov, const SimConfig& sim,
                    simd::Backend backend = simd::Backend::Auto);

double time_avg_queue(const Trajectory& traj);
double vht(const Trajectory& traj, const HighwayConfig& cfg, double dt_hr);
Metrics metrics_of(const Trajectory& traj, const HighwayConfig& cfg);

/// cell x time-bin grid of mean densities; bin_minutes must divide the
/// horizon's duration.
std::vector<std::vector<double>> density_map(const Trajectory& traj,
                                             const HighwayConfig& cfg, int bin_minutes);

/// Metrics-only batched runs: lanes may vary seed and affine policy
/// (policy sweeps share the seed; replications share the policy).
struct LaneTask {
    uint64_t seed = 0;
    AffineControlPolicy policy;  // used when the strategy kind is Affine
};

struct LaneResult {
    Metrics metrics;
    HybridState final_state;
    double invariant_violation = 0.0;
    std::vector<int64_t> mode_steps;  // steps spent per mode
};

struct InvariantMonitor {
    DensityBounds bounds;
    double tol = 0.0;
};

std::vector<LaneResult> simulate_batch(const Strategy& strategy, const HighwayConfig& cfg,
                                       const MarkovCapacityModel& markov,
                                       const SimConfig& sim,
                                       const std::vector<LaneTask>& lanes,
                                       const InvariantMonitor* monitor = nullptr,
                                       simd::Backend backend = simd::Backend::Auto,
                                       int threads = 1);

}  // namespace ssctm
