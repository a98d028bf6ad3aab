#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssctm/simulator.hpp"
#include "ssctm/stability.hpp"

namespace ssctm {

struct GridRange {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    std::vector<double> values() const;
};

struct GridSpec {
    // One range per designed ramp; a single entry is broadcast to all ramps.
    std::vector<GridRange> u;
    std::vector<GridRange> kappa;
    size_t max_candidates = 1000000;

    static GridSpec defaults();  // u in [2500, 6000] step 50, kappa in [0, 50] step 1
};

struct CandidatePoint {
    std::vector<double> u, kappa;
    double objective = 0.0;  // mean drift; +inf when bounds are infeasible
    bool feasible = false;
};

struct DesignResult {
    AffineControlPolicy policy;
    double objective = 0.0;  // mean drift, or the throughput bound for P~2
    bool feasible = false;
    DriftReport report;                   // at the returned policy
    std::vector<CandidatePoint> surface;  // per-candidate log when requested
};

struct DesignOptions {
    DriftOptions drift;
    int threads = 1;
    bool keep_surface = false;
    // Ramps excluded from metering are modeled uncontrolled during design.
    std::vector<bool> metered;
    // Ties within this relative tolerance resolve to the lexicographically
    // smallest (u..., kappa...).
    double tie_tol = 1e-9;
};

/// Two-cell localized synthesis: full grid, exact inner maxima, smallest
/// mean drift wins.
DesignResult design_localized(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                              const GridSpec& grid, const DesignOptions& opts = {});

/// Throughput variant: largest mainline demand (<= the configured one) for
/// which some grid point is stabilizing, to 1 veh/hr.
DesignResult design_localized_throughput(const HighwayConfig& cfg,
                                         const MarkovCapacityModel& markov,
                                         const GridSpec& grid,
                                         const DesignOptions& opts = {});

/// Joint synthesis over all ramps; exact path is desk-scale only (K <= 3).
DesignResult design_full(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                         const GridSpec& grid, const DesignOptions& opts = {});

/// Sequential downstream-to-upstream synthesis; verdict is the full
/// stability check at the assembled policy (buffers 1..K).
DesignResult design_partial(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                            const GridSpec& grid, const DesignOptions& opts = {});

/// Throughput variant of the sequential design: largest mainline demand
/// (<= the configured one) whose full sequential design is feasible; the
/// witnessing policy is returned and deployed at the real demand.
DesignResult design_partial_throughput(const HighwayConfig& cfg,
                                       const MarkovCapacityModel& markov,
                                       const GridSpec& grid,
                                       const DesignOptions& opts = {});

/// Per-merge localized synthesis for K > 2: each ramp is designed on the
/// two-cell section it merges into, with the arriving mainline demand and an
/// upstream buffer that is never the bottleneck. Ramps in `metered` = false
/// are skipped.
DesignResult design_localized_network(const HighwayConfig& cfg,
                                      const MarkovCapacityModel& markov,
                                      const GridSpec& grid,
                                      const std::vector<bool>& metered,
                                      const DesignOptions& opts = {});

/// One update of the integral baseline: mu(t) = clamp(mu(t-1) - K_R (n - n_c)).
std::vector<double> alinea_step(const AlineaSpec& spec, const HighwayConfig& cfg,
                                const std::vector<double>& prev_mu,
                                const std::vector<double>& n_now);

/// One update of the multivariable baseline:
/// mu(t) = clamp(mu(t-1) - K_P (n - n_prev) - K_I (n - n_c)).
std::vector<double> metaline_step(const MetalineSpec& spec, const HighwayConfig& cfg,
                                  const std::vector<double>& prev_mu,
                                  const std::vector<double>& n_now,
                                  const std::vector<double>& n_prev);

struct NamedStrategy {
    std::string name;
    Strategy strategy;
};

struct CompareRow {
    std::string name;
    Metrics mean;
    Metrics stderr_;
    std::vector<Metrics> per_seed;
};

/// Paired-seed comparison: every strategy sees the same seeds (and hence the
/// same capacity sample paths).
std::vector<CompareRow> compare_strategies(const HighwayConfig& cfg,
                                           const MarkovCapacityModel& markov,
                                           const SimConfig& sim,
                                           const std::vector<NamedStrategy>& strategies,
                                           int replications,
                                           simd::Backend backend = simd::Backend::Auto,
                                           int threads = 1);

}  // namespace ssctm
