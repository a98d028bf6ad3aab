#pragma once

#include <vector>

#include "ssctm/stability.hpp"

namespace ssctm::detail {

/// One (buffer, mode) inner maximization instance. gt holds gamma~_{j,k}
/// per cell j; alpha_const is sum_j gt_j alpha_j.
struct InnerProblem {
    const HighwayConfig* cfg = nullptr;
    const MarkovCapacityModel* markov = nullptr;
    const MeterView* mv = nullptr;
    const WeightScheme* weights = nullptr;
    int buffer_k = 1;
    int mode = 1;
    std::vector<double> gt;
    double alpha_const = 0.0;
};

InnerProblem make_problem(DesignVariant scheme, int buffer_k, int mode,
                          const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                          const MeterView& mv, const WeightScheme& weights);

/// Net-flow value at one state of a box (queue indicators as sentinels),
/// evaluated through the coefficient expansion. Matches the dynamics route.
double expansion_eval(const InnerProblem& p, const std::vector<int>& queue,
                      const std::vector<double>& n);

/// Exact maximum over a single box (all weights affine or constant on the
/// box; Step weights must have been split away by the caller).
InnerMax exact_box_max(const InnerProblem& p, const StateBox& box);

/// Compact description of a congestion family: per-buffer indicator fixed or
/// free, density interval per indicator value.
struct SetFamily {
    int buffer = 1;
    std::vector<int> ind;  // per buffer: -1 free, else 0/1
    std::vector<Interval> dens0, dens1;
    int first_cell = 1;  // cells before this do not enter the objective
};

SetFamily set_family(DesignVariant scheme, const DensityBounds& b, int buffer_k, int K,
                     const std::vector<char>& zero_demand = {});
std::vector<StateBox> enumerate_family(const SetFamily& fam);

/// Chain dynamic program over the family on a per-axis grid (knots plus
/// uniform fill), followed by exact single-axis coordinate ascent from the
/// DP argmax. Used beyond the exact-solver axis limit.
InnerMax family_dp_max(const InnerProblem& p, const SetFamily& fam, int grid_fill);

/// Splits Step weights on free axes into constant-weight boxes so the exact
/// solver only ever sees affine weights. Returns box/weight pairs.
struct SplitBox {
    StateBox box;
    WeightScheme weights;
};
std::vector<SplitBox> split_step_weights(const StateBox& box, const WeightScheme& w);

}  // namespace ssctm::detail
