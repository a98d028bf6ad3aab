#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ssctm/sim/batch.hpp"
#include "ssctm/simulator.hpp"

namespace ssctm::sim_detail {

struct KernelPlan {
    int K = 0;
    int m = 1;
    double dt = 0.0;
    int64_t T = 0;
    int64_t steps_per_hour = 360;

    std::vector<double> v, w, njam, l, inv_l, inv_beta, beta;
    std::vector<double> U;
    std::vector<double> queue_cap;  // per buffer, +inf when uncapped
    std::vector<std::vector<double>> F;  // [mode][cell]

    struct Jump {
        double acc;  // cumulative probability threshold within the step
        int target;
    };
    std::vector<std::vector<Jump>> jumps;  // per mode

    std::vector<int64_t> sched_start;
    std::vector<std::vector<double>> sched_alpha;  // [row][cell]

    Strategy::Kind kind = Strategy::NoControl;
    std::vector<char> metered;  // per ramp (index 0 = ramp 2)
    int64_t ctrl_start = 0, ctrl_end = 0;
    int64_t ctrl_period_steps = 1;
    std::vector<double> n_crit;  // per cell
    double alinea_gain = 0.0;
    std::vector<std::vector<double>> KP, KI;  // (K-1) x K

    int mode0 = 1;
    std::vector<double> q0, n0;

    const InvariantMonitor* monitor = nullptr;
};

struct LaneAccum {
    double sum_q = 0.0;
    double sum_vht = 0.0;  // sum of (sum_k l n + sum_k q); multiply by dt later
    std::vector<double> hour_q;    // per bucket sums of total queue
    std::vector<double> hour_vht;  // per bucket sums of (ln + q)
    std::vector<int64_t> mode_steps;
    double violation = 0.0;
    int final_mode = 1;
    std::vector<double> final_q, final_n;
};

struct Recorder {
    int lane = 0;
    Trajectory* traj = nullptr;
};

// Steps `width` lanes in lockstep. Policy arrays are [ramp][lane]; every
// floating-point operation is elementwise identical to the scalar batch, so
// lane results do not depend on the backend.
template <class B>
void run_batch(const KernelPlan& plan, const double* lane_u, const double* lane_kappa,
               const uint64_t* seeds, LaneAccum* accum, Recorder* rec) {
    constexpr int W = B::width;
    const int K = plan.K;
    const double inf = std::numeric_limits<double>::infinity();
    const int n_buckets =
        static_cast<int>((plan.T + plan.steps_per_hour - 1) / plan.steps_per_hour) + 1;

    std::vector<double> q((size_t)K * W), n((size_t)K * W);
    std::vector<int> mode(W, plan.mode0 - 1);
    std::vector<uint64_t> rng(seeds, seeds + W);
    for (int k = 0; k < K; ++k)
        for (int lane = 0; lane < W; ++lane) {
            q[k * W + lane] = plan.q0[k];
            n[k * W + lane] = plan.n0[k];
        }

    for (int lane = 0; lane < W; ++lane) {
        accum[lane] = LaneAccum{};
        accum[lane].hour_q.assign(n_buckets, 0.0);
        accum[lane].hour_vht.assign(n_buckets, 0.0);
        accum[lane].mode_steps.assign(plan.m, 0);
        accum[lane].final_q.resize(K);
        accum[lane].final_n.resize(K);
    }

    // Baseline controller state.
    std::vector<double> mu_state((size_t)std::max(0, K - 1) * W, inf);
    std::vector<double> n_prev((size_t)K * W);
    bool ctrl_inited = false;

    std::vector<double> Fk((size_t)K * W);
    std::vector<double> rbuf((size_t)K * W), fbuf((size_t)K * W);

    const B zero = B::broadcast(0.0);
    const B dtb = B::broadcast(plan.dt);
    const B infb = B::broadcast(inf);

    size_t sched = 0;
    if (rec && rec->traj) {
        Trajectory& tr = *rec->traj;
        tr.K = K;
        tr.dt_hr = plan.dt;
        tr.modes.assign(plan.T + 1, 0);
        tr.queues.assign((size_t)(plan.T + 1) * K, 0.0);
        tr.densities.assign((size_t)(plan.T + 1) * K, 0.0);
        tr.inflows.assign((size_t)plan.T * K, 0.0);
        tr.outflows.assign((size_t)plan.T * K, 0.0);
        tr.modes[0] = plan.mode0;
        for (int k = 0; k < K; ++k) {
            tr.queues[k] = plan.q0[k];
            tr.densities[k] = plan.n0[k];
        }
    }

    for (int64_t t = 0; t < plan.T; ++t) {
        while (sched + 1 < plan.sched_start.size() && plan.sched_start[sched + 1] <= t)
            ++sched;
        const std::vector<double>& alpha = plan.sched_alpha[sched];
        const bool ctrl_on = t >= plan.ctrl_start && t < plan.ctrl_end;

        // Baseline controllers initialize when the window opens and update on
        // the period grid using densities at the update instant.
        if (plan.kind == Strategy::Alinea || plan.kind == Strategy::Metaline) {
            if (ctrl_on && !ctrl_inited) {
                for (int rmp = 0; rmp < K - 1; ++rmp)
                    for (int lane = 0; lane < W; ++lane)
                        mu_state[rmp * W + lane] = plan.U[rmp + 1];
                n_prev = n;
                ctrl_inited = true;
            } else if (ctrl_on && (t - plan.ctrl_start) % plan.ctrl_period_steps == 0) {
                for (int lane = 0; lane < W; ++lane) {
                    for (int rmp = 0; rmp < K - 1; ++rmp) {
                        if (!plan.metered[rmp]) continue;
                        double upd = mu_state[rmp * W + lane];
                        if (plan.kind == Strategy::Alinea) {
                            const int cell = rmp + 1;
                            upd -= plan.alinea_gain *
                                   (n[cell * W + lane] - plan.n_crit[cell]);
                        } else {
                            for (int cell = 0; cell < K; ++cell) {
                                upd -= plan.KP[rmp][cell] *
                                       (n[cell * W + lane] - n_prev[cell * W + lane]);
                                upd -= plan.KI[rmp][cell] *
                                       (n[cell * W + lane] - plan.n_crit[cell]);
                            }
                        }
                        mu_state[rmp * W + lane] =
                            std::min(std::max(upd, 0.0), plan.U[rmp + 1]);
                    }
                }
                n_prev = n;
            }
        }

        // Capacities of the current mode, gathered per lane.
        for (int k = 0; k < K; ++k)
            for (int lane = 0; lane < W; ++lane)
                Fk[k * W + lane] = plan.F[mode[lane]][k];

        // Flows at step start.
        for (int k = K; k >= 1; --k) {
            const int i = k - 1;
            const B qk = B::load(&q[i * W]);
            const B nk = B::load(&n[i * W]);
            const B wall = B::broadcast(plan.w[i]) * (B::broadcast(plan.njam[i]) - nk);
            const B send = B::select(gt(qk, zero), B::broadcast(plan.U[i]),
                                     B::broadcast(alpha[i]));
            B r;
            if (k == 1) {
                r = max(zero, min(send, wall));
            } else {
                B mu = infb;
                if (plan.metered[i - 1] && ctrl_on) {
                    if (plan.kind == Strategy::Affine) {
                        const B u = B::load(&lane_u[(size_t)(i - 1) * W]);
                        const B kap = B::load(&lane_kappa[(size_t)(i - 1) * W]);
                        mu = max(zero, u - kap * nk);
                    } else if (plan.kind != Strategy::NoControl) {
                        mu = B::load(&mu_state[(size_t)(i - 1) * W]);
                    }
                    // Queue cap: metering pauses while the queue exceeds it.
                    const B cap = B::broadcast(plan.queue_cap[i]);
                    mu = B::select(gt(qk, cap), infb, mu);
                }
                r = max(zero, min(min(send, wall), mu));
            }
            r.store(&rbuf[i * W]);

            B f;
            const B sendmain = B::broadcast(plan.v[i]) * nk;
            const B cap = B::load(&Fk[i * W]);
            if (k == K) {
                f = min(sendmain, cap);
            } else {
                const B nn = B::load(&n[(size_t)k * W]);
                const B rn = B::load(&rbuf[(size_t)k * W]);
                const B walln =
                    B::broadcast(plan.w[k]) * (B::broadcast(plan.njam[k]) - nn);
                const B recv = max(zero, walln - rn) * B::broadcast(plan.inv_beta[i]);
                f = min(min(sendmain, cap), recv);
            }
            f.store(&fbuf[i * W]);
        }

        // Euler update with projection.
        B tot_q = zero, tot_vht = zero;
        for (int k = 0; k < K; ++k) {
            const B qk = B::load(&q[k * W]);
            const B nk = B::load(&n[k * W]);
            const B r = B::load(&rbuf[k * W]);
            const B f = B::load(&fbuf[k * W]);
            const B G = B::broadcast(alpha[k]) - r;
            B inflow = r;
            if (k > 0)
                inflow = inflow + B::broadcast(plan.beta[k - 1]) * B::load(&fbuf[(size_t)(k - 1) * W]);
            const B H = (inflow - f) * B::broadcast(plan.inv_l[k]);
            const B qn = max(zero, qk + dtb * G);
            B nn = max(zero, min(B::broadcast(plan.njam[k]), nk + dtb * H));
            qn.store(&q[k * W]);
            nn.store(&n[k * W]);
            tot_q = tot_q + qn;
            tot_vht = tot_vht + qn + B::broadcast(plan.l[k]) * nn;
        }

        // Accumulate metrics and optional containment violation.
        {
            double tq[W], tv[W];
            tot_q.store(tq);
            tot_vht.store(tv);
            const int bucket = static_cast<int>(t / plan.steps_per_hour);
            for (int lane = 0; lane < W; ++lane) {
                accum[lane].sum_q += tq[lane];
                accum[lane].sum_vht += tv[lane];
                accum[lane].hour_q[bucket] += tq[lane];
                accum[lane].hour_vht[bucket] += tv[lane];
                accum[lane].mode_steps[mode[lane]] += 1;
            }
        }
        if (plan.monitor) {
            const DensityBounds& b = plan.monitor->bounds;
            for (int lane = 0; lane < W; ++lane) {
                double worst = 0.0;
                for (int k = 0; k < K; ++k) {
                    const double nk = n[k * W + lane];
                    const double lo = q[k * W + lane] > 0 ? b.lower_with_queue[k]
                                                          : b.lower_no_queue[k];
                    worst = std::max(worst, lo - nk);
                    worst = std::max(worst, nk - b.upper_blocked[k]);
                }
                accum[lane].violation = std::max(accum[lane].violation, worst);
            }
        }

        // Mode switching: one uniform per lane per step regardless of outcome,
        // so paired runs share mode paths.
        for (int lane = 0; lane < W; ++lane) {
            const double u01 = simd::uniform01(rng[lane]);
            const auto& js = plan.jumps[mode[lane]];
            for (const auto& j : js) {
                if (u01 < j.acc) {
                    mode[lane] = j.target;
                    break;
                }
            }
        }

        if (rec && rec->traj) {
            Trajectory& tr = *rec->traj;
            const int lane = rec->lane;
            tr.modes[t + 1] = mode[lane] + 1;
            for (int k = 0; k < K; ++k) {
                tr.queues[(size_t)(t + 1) * K + k] = q[k * W + lane];
                tr.densities[(size_t)(t + 1) * K + k] = n[k * W + lane];
                tr.inflows[(size_t)t * K + k] = rbuf[k * W + lane];
                tr.outflows[(size_t)t * K + k] = fbuf[k * W + lane];
            }
        }
    }

    for (int lane = 0; lane < W; ++lane) {
        accum[lane].final_mode = mode[lane] + 1;
        for (int k = 0; k < K; ++k) {
            accum[lane].final_q[k] = q[k * W + lane];
            accum[lane].final_n[k] = n[k * W + lane];
        }
    }
}

KernelPlan make_plan(const Strategy& strategy, const HighwayConfig& cfg,
                     const MarkovCapacityModel& markov, const SimConfig& sim,
                     const InvariantMonitor* monitor);

void run_plan_scalar(const KernelPlan& plan, const double* u, const double* kappa,
                     const uint64_t* seeds, LaneAccum* accum, Recorder* rec);
#if SSCTM_X86
void run_plan_avx2(const KernelPlan& plan, const double* u, const double* kappa,
                   const uint64_t* seeds, LaneAccum* accum, Recorder* rec);
#endif
#if SSCTM_NEON
void run_plan_neon(const KernelPlan& plan, const double* u, const double* kappa,
                   const uint64_t* seeds, LaneAccum* accum, Recorder* rec);
#endif

}  // namespace ssctm::sim_detail
