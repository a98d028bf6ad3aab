#pragma once

#include <vector>

#include "ssctm/types.hpp"

namespace ssctm {

/// Stationary distribution of the mode chain: solves the balance equations
/// sum_s' p_s' lambda_{s',s} = p_s sum_s' lambda_{s,s'} with sum p = 1.
/// Throws SingularChain if the balance system is rank-deficient beyond the
/// expected one-dimensional kernel.
std::vector<double> steady_state_probs(const MarkovCapacityModel& markov);

struct CapacityStats {
    double mean = 0.0; // F_bar
    double max = 0.0;  // F^max
    double min = 0.0;  // F^min
};

CapacityStats capacity_stats(const MarkovCapacityModel& markov,
                             const std::vector<double>& p, int cell);

/// Residual of the balance system, infinity norm.
double balance_residual(const MarkovCapacityModel& markov, const std::vector<double>& p);

}  // namespace ssctm
