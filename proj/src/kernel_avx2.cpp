#include "ssctm/sim/kernel.hpp"

#if SSCTM_X86 && defined(__AVX2__)

namespace ssctm::sim_detail {

void run_plan_avx2(const KernelPlan& plan, const double* u, const double* kappa,
                   const uint64_t* seeds, LaneAccum* accum, Recorder* rec) {
    run_batch<simd::Avx2Batch>(plan, u, kappa, seeds, accum, rec);
}

}  // namespace ssctm::sim_detail

#endif
