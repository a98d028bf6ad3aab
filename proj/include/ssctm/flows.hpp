#pragma once

#include <vector>

#include "ssctm/pwaffine.hpp"
#include "ssctm/types.hpp"

namespace ssctm {

/// Effective metering per ramp. Uncontrolled ramps admit flow without a
/// control term (the min simply skips it). Index 0 corresponds to ramp 2.
struct MeterView {
    struct Ramp {
        bool controlled = false;
        double u = 0.0;
        double kappa = 0.0;
    };
    std::vector<Ramp> ramps;

    static MeterView none(int num_cells) {
        MeterView mv;
        mv.ramps.resize(num_cells > 0 ? num_cells - 1 : 0);
        return mv;
    }
    static MeterView from_policy(const AffineControlPolicy& policy) {
        MeterView mv;
        mv.ramps.resize(policy.u_veh_per_hr.size());
        for (size_t i = 0; i < mv.ramps.size(); ++i)
            mv.ramps[i] = Ramp{true, policy.u_veh_per_hr[i], policy.kappa_kmh[i]};
        return mv;
    }
    // ramp is the 1-based cell index in 2..K
    const Ramp& ramp(int k) const { return ramps[k - 2]; }
};

/// mu_k(n_k) = max(0, u_k - kappa_k n_k); +infinity when uncontrolled.
double control_term(const MeterView& mv, int ramp, double n_k);

/// r_1: mainline inflow from buffer 1 into cell 1.
double mainline_inflow(double q1, double n1, const HighwayConfig& cfg);

/// r_k for ramp k in 2..K.
double onramp_flow(const HighwayConfig& cfg, const MeterView& mv, int k, double q_k,
                   double n_k);

/// f_k in mode state.mode. Interior cells see the receiving space of cell
/// k+1 net of the (priority) on-ramp flow; the last cell discharges freely.
double cell_outflow(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                    const MeterView& mv, int k, const HybridState& state);

/// Queue rates G (veh/hr) and density rates H (veh/km/hr).
void dynamics(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
              const MeterView& mv, const HybridState& state, std::vector<double>& G,
              std::vector<double>& H);

/// r_k as a function of n_k on [lo, hi], queue branch fixed.
PwAffine onramp_flow_fn(const HighwayConfig& cfg, const MeterView& mv, int k,
                        bool queue_present, double lo, double hi);
PwAffine mainline_inflow_fn(const HighwayConfig& cfg, bool queue_present, double lo,
                            double hi);

/// Receiving space of cell k+1 for mainline traffic, as a function of
/// n_{k+1}: max(0, w_{k+1}(n_jam - x) - r_{k+1}(i, x)) / beta_k.
PwAffine receiving_fn(const HighwayConfig& cfg, const MeterView& mv, int k,
                      bool queue_present_next, double lo, double hi);

/// Density boundaries per the invariant-set recursions. The queue-present
/// lower bounds solve a monotone piecewise-linear equation per cell; the
/// blocked upper bounds run a backward recursion through the minimum
/// receiving flow. All solves are exact knot enumerations. Throws NoRoot if
/// some cell admits no root in [0, n_jam].
DensityBounds density_bounds(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                             const MeterView& mv);
DensityBounds density_bounds(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                             const AffineControlPolicy& policy);

}  // namespace ssctm
