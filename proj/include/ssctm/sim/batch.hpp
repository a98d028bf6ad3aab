#pragma once

#include <cstdint>
#include <string>

// Lane-batch abstraction for the stepping kernel. The scalar type is the
// reference; vector backends must perform the identical IEEE operation per
// lane so batched runs are bit-equal to scalar runs (the project is built
// with -ffp-contract=off to keep this true).

#if defined(__x86_64__) || defined(_M_X64)
#define SSCTM_X86 1
#include <immintrin.h>
#else
#define SSCTM_X86 0
#endif

#if defined(__aarch64__)
#define SSCTM_NEON 1
#include <arm_neon.h>
#else
#define SSCTM_NEON 0
#endif

namespace ssctm::simd {

struct ScalarBatch {
    static constexpr int width = 1;
    double v;

    static ScalarBatch broadcast(double x) { return {x}; }
    static ScalarBatch load(const double* p) { return {*p}; }
    void store(double* p) const { *p = v; }

    friend ScalarBatch operator+(ScalarBatch a, ScalarBatch b) { return {a.v + b.v}; }
    friend ScalarBatch operator-(ScalarBatch a, ScalarBatch b) { return {a.v - b.v}; }
    friend ScalarBatch operator*(ScalarBatch a, ScalarBatch b) { return {a.v * b.v}; }
    friend ScalarBatch min(ScalarBatch a, ScalarBatch b) { return {a.v < b.v ? a.v : b.v}; }
    friend ScalarBatch max(ScalarBatch a, ScalarBatch b) { return {a.v > b.v ? a.v : b.v}; }

    using Mask = bool;
    friend Mask gt(ScalarBatch a, ScalarBatch b) { return a.v > b.v; }
    static ScalarBatch select(Mask m, ScalarBatch a, ScalarBatch b) { return m ? a : b; }
};

#if SSCTM_X86 && defined(__AVX2__)
struct Avx2Batch {
    static constexpr int width = 4;
    __m256d v;

    static Avx2Batch broadcast(double x) { return {_mm256_set1_pd(x)}; }
    static Avx2Batch load(const double* p) { return {_mm256_loadu_pd(p)}; }
    void store(double* p) const { _mm256_storeu_pd(p, v); }

    friend Avx2Batch operator+(Avx2Batch a, Avx2Batch b) { return {_mm256_add_pd(a.v, b.v)}; }
    friend Avx2Batch operator-(Avx2Batch a, Avx2Batch b) { return {_mm256_sub_pd(a.v, b.v)}; }
    friend Avx2Batch operator*(Avx2Batch a, Avx2Batch b) { return {_mm256_mul_pd(a.v, b.v)}; }
    // minpd/maxpd return the second operand on ties/NaN; operand order below
    // matches (a < b ? a : b) exactly for the NaN-free inputs used here.
    friend Avx2Batch min(Avx2Batch a, Avx2Batch b) { return {_mm256_min_pd(b.v, a.v)}; }
    friend Avx2Batch max(Avx2Batch a, Avx2Batch b) { return {_mm256_max_pd(b.v, a.v)}; }

    using Mask = __m256d;
    friend Mask gt(Avx2Batch a, Avx2Batch b) { return _mm256_cmp_pd(a.v, b.v, _CMP_GT_OQ); }
    static Avx2Batch select(Mask m, Avx2Batch a, Avx2Batch b) {
        return {_mm256_blendv_pd(b.v, a.v, m)};
    }
};
#endif

#if SSCTM_NEON
struct NeonBatch {
    static constexpr int width = 2;
    float64x2_t v;

    static NeonBatch broadcast(double x) { return {vdupq_n_f64(x)}; }
    static NeonBatch load(const double* p) { return {vld1q_f64(p)}; }
    void store(double* p) const { vst1q_f64(p, v); }

    friend NeonBatch operator+(NeonBatch a, NeonBatch b) { return {vaddq_f64(a.v, b.v)}; }
    friend NeonBatch operator-(NeonBatch a, NeonBatch b) { return {vsubq_f64(a.v, b.v)}; }
    friend NeonBatch operator*(NeonBatch a, NeonBatch b) { return {vmulq_f64(a.v, b.v)}; }
    friend NeonBatch min(NeonBatch a, NeonBatch b) { return {vbslq_f64(vcltq_f64(a.v, b.v), a.v, b.v)}; }
    friend NeonBatch max(NeonBatch a, NeonBatch b) { return {vbslq_f64(vcgtq_f64(a.v, b.v), a.v, b.v)}; }

    using Mask = uint64x2_t;
    friend Mask gt(NeonBatch a, NeonBatch b) { return vcgtq_f64(a.v, b.v); }
    static NeonBatch select(Mask m, NeonBatch a, NeonBatch b) {
        return {vbslq_f64(m, a.v, b.v)};
    }
};
#endif

enum class Backend { Auto, Scalar, Simd };

/// Runtime check for the vector backend compiled into this build.
bool simd_available();
std::string simd_name();

/// splitmix64; the documented RNG of all simulations. One uniform per step.
inline uint64_t splitmix64_next(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline double uniform01(uint64_t& state) {
    return static_cast<double>(splitmix64_next(state) >> 11) * 0x1.0p-53;
}

}  // namespace ssctm::simd
