#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssctm/flows.hpp"
#include "ssctm/types.hpp"

namespace ssctm {

enum class DesignVariant { Localized, FullyCoordinated, PartiallyCoordinated };

std::string to_string(DesignVariant v);

/// Weight handling for the partially coordinated scheme. The printed form
/// anchors the affine weight at the free upper bound, which degenerates to a
/// step whenever a cell is decoupled from downstream congestion (blocked and
/// free bounds coincide, including always at the last cell). The
/// lower-anchored form uses the same anchors as the fully coordinated
/// weights and is the default because it reproduces the reference designs.
enum class PcWeightMode { LowerAnchored, PrintedClamped, PrintedRaw };

struct WeightFn {
    enum Kind { One, Affine, Step } kind = One;
    double a = 0.0;
    double b = 1.0;
    bool clamp01 = false;

    double eval(double x) const;
    bool trivial() const { return kind == One; }
};

struct WeightScheme {
    std::vector<WeightFn> rho;  // one per cell
};

WeightScheme localized_weights(const DensityBounds& b);
WeightScheme fully_coordinated_weights(const DensityBounds& b);
WeightScheme partially_coordinated_weights(const DensityBounds& b, int buffer_k,
                                           PcWeightMode mode);

/// Closed interval; pinned coordinates have hi == lo.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool pinned() const { return hi - lo <= 1e-12; }
};

/// One product box of states: queue indicators (1 = queue present sentinel)
/// and a density interval per cell.
struct StateBox {
    std::vector<int> queue;
    std::vector<Interval> dens;
};

struct CongestionSet {
    int buffer = 1;  // 1-based
    std::vector<StateBox> boxes;
};

/// Enumerated congestion set for one buffer. Box counts follow the scheme:
/// the localized sets are the two-piece union for buffer 1 and a single box
/// for buffer 2; coordinated sets enumerate the free queue indicators.
CongestionSet congestion_set(DesignVariant scheme, const DensityBounds& b, int buffer_k,
                             int K, const std::vector<char>& zero_demand = {});
std::vector<CongestionSet> congestion_sets(DesignVariant scheme, const DensityBounds& b,
                                           int K);

struct InvariantSet {
    std::vector<StateBox> boxes;
    /// Membership with per-coordinate tolerance (fraction of n_jam is the
    /// caller's business; tol here is absolute per coordinate).
    bool contains(const std::vector<double>& q, const std::vector<double>& n,
                  double tol) const;
};

InvariantSet invariant_set(DesignVariant scheme, const DensityBounds& b, int K);

/// gamma_{j,k}: fraction of cell-j outflow that reaches cell k (1-based,
/// j <= k). gamma_{k,k} = 1.
double gamma(int j, int k, const std::vector<double>& betas);

/// gamma~ of the coordinated expansions: gamma_{j,k} for j <= k, gamma_{k,j}
/// for j > k.
double gamma_tilde(int j, int k, const std::vector<double>& betas);

/// Pointwise weighted net flow D_k(phi) for the given scheme weights,
/// evaluated through the dynamics vector fields.
double weighted_net_flow(DesignVariant scheme, int buffer_k, const HybridState& state,
                         const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                         const MeterView& mv, const WeightScheme& weights);

struct InnerMax {
    double value = 0.0;
    HybridState argmax;
};

struct DriftOptions {
    PcWeightMode pc_weights = PcWeightMode::LowerAnchored;
    int exact_axis_limit = 3;
    // Fallback solver: per-axis grid resolution for the chain DP, followed by
    // exact single-axis coordinate ascent from the DP argmax.
    int fallback_grid = 48;
    bool allow_fallback = true;
    double stability_eps = 1e-9;
};

/// Exact maximum of D_k over one congestion set in one mode. Exact for up to
/// exact_axis_limit free density axes; beyond that the chain DP fallback
/// plus polish is used (or Unsupported is thrown if disabled).
InnerMax max_net_flow_over_set(DesignVariant scheme, int buffer_k, int mode,
                               const CongestionSet& set, const HighwayConfig& cfg,
                               const MarkovCapacityModel& markov, const MeterView& mv,
                               const WeightScheme& weights,
                               const DriftOptions& opts = {});

struct DriftEntry {
    double value = 0.0;
    HybridState argmax;
};

struct DriftReport {
    DesignVariant scheme = DesignVariant::Localized;
    std::vector<std::vector<DriftEntry>> per_buffer_mode;  // [K][m]
    std::vector<double> buffer_mean;                       // sum_s p_s D_{k,s}
    double mean_drift = 0.0;                               // max over buffers
    int binding_buffer = 1;                                // 1-based argmax buffer
    bool stable = false;                                   // mean_drift < -eps
    double queue_bound_proxy = 0.0;  // -1/mean_drift when stable, else +inf
};

/// Mean per-buffer drift for one buffer (used by the sequential design
/// stages); weights and sets are rebuilt from bounds for the scheme.
double buffer_mean_drift(DesignVariant scheme, int buffer_k, const HighwayConfig& cfg,
                         const MarkovCapacityModel& markov, const MeterView& mv,
                         const DensityBounds& bounds, const std::vector<double>& p,
                         const DriftOptions& opts = {});

DriftReport mean_drift(DesignVariant scheme, const HighwayConfig& cfg,
                       const MarkovCapacityModel& markov, const MeterView& mv,
                       const DriftOptions& opts = {});
DriftReport mean_drift(DesignVariant scheme, const HighwayConfig& cfg,
                       const MarkovCapacityModel& markov, const AffineControlPolicy& policy,
                       const DriftOptions& opts = {});

/// Lyapunov offsets b_{k,s} >= 0 solving
///   z_{k,s} + sum_s' lambda_{s,s'} (b_{k,s'} - b_{k,s}) = sum_s' p_s' z_{k,s'}.
/// Anchored at min_s b_{k,s} = 0.
struct LyapunovCertificate {
    std::vector<std::vector<double>> b;  // [K][m]
    double residual = 0.0;
};

LyapunovCertificate solve_b_system(const std::vector<std::vector<double>>& z,
                                   const MarkovCapacityModel& markov,
                                   const std::vector<double>& p);

/// Interface decoupling: the receiving space of cell k+1 net of its ramp
/// flow covers the full upstream discharge on the stated density interval.
std::vector<bool> check_decoupling(const HighwayConfig& cfg,
                                   const MarkovCapacityModel& markov, const MeterView& mv,
                                   const DensityBounds& bounds);

struct Corollary1Verdict {
    bool applicable = false;
    bool stable_iff = false;  // meaningful only when applicable
};

/// Two-cell special case: when buffer 1 is not a bottleneck, cell 2 is the
/// binding bottleneck in both queue regimes, and the interface is decoupled,
/// stability is equivalent to the strict demand conditions.
Corollary1Verdict corollary1_verdict(const HighwayConfig& cfg,
                                     const MarkovCapacityModel& markov,
                                     const MeterView& mv);

/// Checks the decoupling and bottleneck conditions for the K-cell
/// equivalence result; when they hold, cross-evaluates the unweighted
/// localized and coordinated objectives at the policy and reports whether
/// they agree within tolerance.
bool corollary2_equivalence_check(const HighwayConfig& cfg,
                                  const MarkovCapacityModel& markov,
                                  const AffineControlPolicy& pc_policy, double tol = 1e-6);

}  // namespace ssctm
