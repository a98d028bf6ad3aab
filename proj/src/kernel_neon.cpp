#include "ssctm/sim/kernel.hpp"

#if SSCTM_NEON

namespace ssctm::sim_detail {

void run_plan_neon(const KernelPlan& plan, const double* u, const double* kappa,
                   const uint64_t* seeds, LaneAccum* accum, Recorder* rec) {
    run_batch<simd::NeonBatch>(plan, u, kappa, seeds, accum, rec);
}

}  // namespace ssctm::sim_detail

#endif
