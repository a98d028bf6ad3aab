#include "ssctm/sim/kernel.hpp"

namespace ssctm::sim_detail {

void run_plan_scalar(const KernelPlan& plan, const double* u, const double* kappa,
                     const uint64_t* seeds, LaneAccum* accum, Recorder* rec) {
    run_batch<simd::ScalarBatch>(plan, u, kappa, seeds, accum, rec);
}

}  // namespace ssctm::sim_detail
