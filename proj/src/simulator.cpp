#include "ssctm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "ssctm/errors.hpp"
#include "ssctm/sim/kernel.hpp"

namespace ssctm {

void validate_sim(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                  const SimConfig& sim) {
    const int K = cfg.num_cells();
    if (!(sim.dt_hr > 0)) throw ValidationError("sim.dt_s", "must be > 0");
    if (sim.horizon_steps < 0) throw ValidationError("sim.horizon_steps", "must be >= 0");
    double max_out = 0.0;
    for (int s = 0; s < markov.mode_count; ++s) {
        double out = 0.0;
        for (int t = 0; t < markov.mode_count; ++t)
            out += markov.transition_rates_per_hr[s][t];
        max_out = std::max(max_out, out);
    }
    if (sim.dt_hr * max_out >= 1.0)
        throw ValidationError("sim.dt_s", "dt * max outflow rate must be < 1");
    if (sim.queue_cap_veh_per_lane && *sim.queue_cap_veh_per_lane <= 0)
        throw ValidationError("sim.queue_cap_veh_per_lane", "must be > 0");
    if (!sim.lanes_per_ramp.empty() &&
        static_cast<int>(sim.lanes_per_ramp.size()) != K)
        throw ValidationError("sim.lanes", "expected K entries");
    validate_state(cfg, sim.initial_state, markov.mode_count);
    for (const DemandStep& row : sim.demand_schedule) {
        if (static_cast<int>(row.alpha.size()) != K)
            throw ValidationError("sim.demand", "expected K entries per row");
        for (int k = 0; k < K; ++k)
            if (row.alpha[k] < 0 || row.alpha[k] > cfg.buffers[k].capacity_veh_per_hr)
                throw ValidationError("sim.demand", "alpha must be in [0, U]");
    }
}

HybridState Trajectory::state_at(int64_t t) const {
    HybridState st;
    st.mode = modes[t];
    st.queues_veh.assign(queues.begin() + t * K, queues.begin() + (t + 1) * K);
    st.densities_veh_per_km.assign(densities.begin() + t * K,
                                   densities.begin() + (t + 1) * K);
    return st;
}

namespace sim_detail {

KernelPlan make_plan(const Strategy& strategy, const HighwayConfig& cfg,
                     const MarkovCapacityModel& markov, const SimConfig& sim,
                     const InvariantMonitor* monitor) {
    const int K = cfg.num_cells();
    KernelPlan plan;
    plan.K = K;
    plan.m = markov.mode_count;
    plan.dt = sim.dt_hr;
    plan.T = sim.horizon_steps;
    plan.steps_per_hour = std::max<int64_t>(1, llround(1.0 / sim.dt_hr));

    plan.v.resize(K);
    plan.w.resize(K);
    plan.njam.resize(K);
    plan.l.resize(K);
    plan.inv_l.resize(K);
    plan.beta.resize(K);
    plan.inv_beta.resize(K);
    plan.U.resize(K);
    plan.queue_cap.assign(K, std::numeric_limits<double>::infinity());
    for (int k = 0; k < K; ++k) {
        const CellParams& c = cfg.cells[k];
        plan.v[k] = c.free_flow_speed_kmh;
        plan.w[k] = c.congestion_wave_speed_kmh;
        plan.njam[k] = c.jam_density_veh_per_km;
        plan.l[k] = c.length_km;
        plan.inv_l[k] = 1.0 / c.length_km;
        plan.beta[k] = c.mainline_ratio;
        plan.inv_beta[k] = c.mainline_ratio > 0 ? 1.0 / c.mainline_ratio : 0.0;
        plan.U[k] = cfg.buffers[k].capacity_veh_per_hr;
        if (sim.queue_cap_veh_per_lane) {
            const double lanes =
                sim.lanes_per_ramp.empty() ? 1.0 : sim.lanes_per_ramp[k];
            plan.queue_cap[k] = *sim.queue_cap_veh_per_lane * lanes;
        }
    }
    plan.F = markov.capacities;

    plan.jumps.resize(markov.mode_count);
    for (int s = 0; s < markov.mode_count; ++s) {
        double acc = 0.0;
        for (int t2 = 0; t2 < markov.mode_count; ++t2) {
            if (t2 == s) continue;
            const double p = markov.transition_rates_per_hr[s][t2] * sim.dt_hr;
            if (p <= 0) continue;
            acc += p;
            plan.jumps[s].push_back(KernelPlan::Jump{acc, t2});
        }
    }

    // Base demand row at step 0, overridden by the schedule.
    std::vector<double> base(K);
    for (int k = 0; k < K; ++k) base[k] = cfg.buffers[k].demand_veh_per_hr;
    plan.sched_start.push_back(0);
    plan.sched_alpha.push_back(base);
    for (const DemandStep& row : sim.demand_schedule) {
        if (row.start_step <= 0) {
            plan.sched_alpha[0] = row.alpha;
        } else {
            plan.sched_start.push_back(row.start_step);
            plan.sched_alpha.push_back(row.alpha);
        }
    }

    plan.kind = strategy.kind;
    plan.metered.assign(std::max(0, K - 1), 1);
    if (!strategy.metered.empty())
        for (int i = 0; i < K - 1; ++i) plan.metered[i] = strategy.metered[i] ? 1 : 0;
    plan.ctrl_start = sim.control_start_step.value_or(0);
    plan.ctrl_end = sim.control_end_step.value_or(std::numeric_limits<int64_t>::max());

    plan.n_crit.resize(K);
    for (int k = 0; k < K; ++k) plan.n_crit[k] = critical_density(cfg, markov, k);
    if (strategy.kind == Strategy::Alinea) {
        plan.alinea_gain = strategy.alinea.gain;
        if (!strategy.alinea.n_crit.empty()) plan.n_crit = strategy.alinea.n_crit;
        plan.ctrl_period_steps =
            std::max<int64_t>(1, llround(strategy.alinea.period_s / 3600.0 / sim.dt_hr));
    } else if (strategy.kind == Strategy::Metaline) {
        plan.KP = strategy.metaline.KP;
        plan.KI = strategy.metaline.KI;
        if (!strategy.metaline.n_crit.empty()) plan.n_crit = strategy.metaline.n_crit;
        plan.ctrl_period_steps =
            std::max<int64_t>(1, llround(strategy.metaline.period_s / 3600.0 / sim.dt_hr));
    } else {
        plan.ctrl_period_steps = 1;
    }

    plan.mode0 = sim.initial_state.mode;
    plan.q0 = sim.initial_state.queues_veh;
    plan.n0 = sim.initial_state.densities_veh_per_km;
    plan.monitor = monitor;
    return plan;
}

}  // namespace sim_detail

namespace {

using sim_detail::KernelPlan;
using sim_detail::LaneAccum;
using sim_detail::Recorder;

int backend_width(simd::Backend b) {
    if (b == simd::Backend::Scalar) return 1;
#if SSCTM_X86
    return simd::simd_available() ? 4 : 1;
#elif SSCTM_NEON
    return 2;
#else
    return 1;
#endif
}

void run_width(const KernelPlan& plan, int width, const double* u, const double* kappa,
               const uint64_t* seeds, LaneAccum* accum, Recorder* rec) {
    if (width == 1) {
        sim_detail::run_plan_scalar(plan, u, kappa, seeds, accum, rec);
        return;
    }
#if SSCTM_X86
    sim_detail::run_plan_avx2(plan, u, kappa, seeds, accum, rec);
#elif SSCTM_NEON
    sim_detail::run_plan_neon(plan, u, kappa, seeds, accum, rec);
#else
    sim_detail::run_plan_scalar(plan, u, kappa, seeds, accum, rec);
#endif
}

Metrics metrics_from_accum(const LaneAccum& a, const KernelPlan& plan) {
    Metrics m;
    m.time_avg_queue_veh = plan.T > 0 ? a.sum_q / static_cast<double>(plan.T) : 0.0;
    m.vht_veh_hr = a.sum_vht * plan.dt;
    const int used =
        static_cast<int>((plan.T + plan.steps_per_hour - 1) / plan.steps_per_hour);
    m.per_hour.resize(used);
    for (int b = 0; b < used; ++b) {
        const int64_t n_steps =
            std::min<int64_t>(plan.steps_per_hour, plan.T - b * plan.steps_per_hour);
        m.per_hour[b].queue_mean = n_steps > 0 ? a.hour_q[b] / n_steps : 0.0;
        m.per_hour[b].vht = a.hour_vht[b] * plan.dt;
    }
    return m;
}

}  // namespace

namespace simd {
bool simd_available() {
#if SSCTM_X86
    return __builtin_cpu_supports("avx2");
#elif SSCTM_NEON
    return true;
#else
    return false;
#endif
}

std::string simd_name() {
#if SSCTM_X86
    return "avx2";
#elif SSCTM_NEON
    return "neon";
#else
    return "scalar";
#endif
}
}  // namespace simd

Trajectory simulate(const Strategy& strategy, const HighwayConfig& cfg,
                    const MarkovCapacityModel& markov, const SimConfig& sim,
                    simd::Backend backend) {
    validate_sim(cfg, markov, sim);
    (void)backend;  // single-lane runs use the scalar reference path
    KernelPlan plan = sim_detail::make_plan(strategy, cfg, markov, sim, nullptr);
    const int K = cfg.num_cells();
    std::vector<double> u(std::max(0, K - 1), 0.0), kappa(std::max(0, K - 1), 0.0);
    if (strategy.kind == Strategy::Affine) {
        u = strategy.policy.u_veh_per_hr;
        kappa = strategy.policy.kappa_kmh;
    }
    uint64_t seed = sim.seed;
    Trajectory traj;
    Recorder rec{0, &traj};
    LaneAccum accum;
    sim_detail::run_plan_scalar(plan, u.data(), kappa.data(), &seed, &accum, &rec);
    return traj;
}

double time_avg_queue(const Trajectory& traj) {
    const int64_t T = traj.steps();
    if (T <= 0) return 0.0;
    double sum = 0.0;
    for (int64_t t = 1; t <= T; ++t)
        for (int k = 0; k < traj.K; ++k) sum += traj.queues[t * traj.K + k];
    return sum / static_cast<double>(T);
}

double vht(const Trajectory& traj, const HighwayConfig& cfg, double dt_hr) {
    const int64_t T = traj.steps();
    double sum = 0.0;
    for (int64_t t = 1; t <= T; ++t)
        for (int k = 0; k < traj.K; ++k)
            sum += traj.queues[t * traj.K + k] +
                   cfg.cells[k].length_km * traj.densities[t * traj.K + k];
    return sum * dt_hr;
}

Metrics metrics_of(const Trajectory& traj, const HighwayConfig& cfg) {
    Metrics m;
    const int64_t T = traj.steps();
    m.time_avg_queue_veh = time_avg_queue(traj);
    m.vht_veh_hr = vht(traj, cfg, traj.dt_hr);
    const int64_t steps_per_hour = std::max<int64_t>(1, llround(1.0 / traj.dt_hr));
    const int used = static_cast<int>((T + steps_per_hour - 1) / steps_per_hour);
    m.per_hour.assign(used, HourlyMetric{});
    for (int64_t t = 1; t <= T; ++t) {
        const int b = static_cast<int>((t - 1) / steps_per_hour);
        double tq = 0.0, tv = 0.0;
        for (int k = 0; k < traj.K; ++k) {
            tq += traj.queues[t * traj.K + k];
            tv += traj.queues[t * traj.K + k] +
                  cfg.cells[k].length_km * traj.densities[t * traj.K + k];
        }
        m.per_hour[b].queue_mean += tq;
        m.per_hour[b].vht += tv * traj.dt_hr;
    }
    for (int b = 0; b < used; ++b) {
        const int64_t n_steps = std::min<int64_t>(steps_per_hour, T - b * steps_per_hour);
        if (n_steps > 0) m.per_hour[b].queue_mean /= static_cast<double>(n_steps);
    }
    return m;
}

std::vector<std::vector<double>> density_map(const Trajectory& traj,
                                             const HighwayConfig& cfg, int bin_minutes) {
    const int64_t T = traj.steps();
    if (bin_minutes <= 0) throw ValidationError("bin_minutes", "must be > 0");
    const double steps_per_bin_f = bin_minutes / 60.0 / traj.dt_hr;
    const int64_t steps_per_bin = llround(steps_per_bin_f);
    if (steps_per_bin <= 0 || std::abs(steps_per_bin - steps_per_bin_f) > 1e-9 ||
        T % steps_per_bin != 0)
        throw ValidationError("bin_minutes", "must evenly divide the horizon");
    const int64_t bins = T / steps_per_bin;
    std::vector<std::vector<double>> grid(traj.K, std::vector<double>(bins, 0.0));
    for (int64_t t = 1; t <= T; ++t) {
        const int64_t b = (t - 1) / steps_per_bin;
        for (int k = 0; k < traj.K; ++k)
            grid[k][b] += traj.densities[t * traj.K + k];
    }
    for (int k = 0; k < traj.K; ++k)
        for (int64_t b = 0; b < bins; ++b) grid[k][b] /= static_cast<double>(steps_per_bin);
    (void)cfg;
    return grid;
}

std::vector<LaneResult> simulate_batch(const Strategy& strategy, const HighwayConfig& cfg,
                                       const MarkovCapacityModel& markov,
                                       const SimConfig& sim,
                                       const std::vector<LaneTask>& lanes,
                                       const InvariantMonitor* monitor,
                                       simd::Backend backend, int threads) {
    validate_sim(cfg, markov, sim);
    if (backend == simd::Backend::Simd && !simd::simd_available())
        throw Unsupported("no SIMD backend on this host");
    KernelPlan plan = sim_detail::make_plan(strategy, cfg, markov, sim, monitor);
    const int K = cfg.num_cells();
    const int nr = std::max(0, K - 1);
    const int W = backend_width(backend);
    const int n_lanes = static_cast<int>(lanes.size());
    std::vector<LaneResult> out(n_lanes);

    struct Chunk {
        int begin, count;  // count == W or tail handled scalar
    };
    std::vector<Chunk> chunks;
    int at = 0;
    while (at + W <= n_lanes) {
        chunks.push_back({at, W});
        at += W;
    }
    while (at < n_lanes) {
        chunks.push_back({at, 1});
        ++at;
    }

    auto run_chunk = [&](const Chunk& c) {
        std::vector<double> u((size_t)nr * c.count, 0.0), kap((size_t)nr * c.count, 0.0);
        std::vector<uint64_t> seeds(c.count);
        for (int j = 0; j < c.count; ++j) {
            const LaneTask& task = lanes[c.begin + j];
            seeds[j] = task.seed;
            if (strategy.kind == Strategy::Affine) {
                const AffineControlPolicy& p =
                    task.policy.u_veh_per_hr.empty() ? strategy.policy : task.policy;
                for (int rmp = 0; rmp < nr; ++rmp) {
                    u[(size_t)rmp * c.count + j] = p.u_veh_per_hr[rmp];
                    kap[(size_t)rmp * c.count + j] = p.kappa_kmh[rmp];
                }
            }
        }
        std::vector<LaneAccum> accum(c.count);
        run_width(plan, c.count, u.data(), kap.data(), seeds.data(), accum.data(), nullptr);
        for (int j = 0; j < c.count; ++j) {
            LaneResult& r = out[c.begin + j];
            r.metrics = metrics_from_accum(accum[j], plan);
            r.final_state.mode = accum[j].final_mode;
            r.final_state.queues_veh = accum[j].final_q;
            r.final_state.densities_veh_per_km = accum[j].final_n;
            r.invariant_violation = accum[j].violation;
            r.mode_steps = accum[j].mode_steps;
        }
    };

    if (threads <= 1 || chunks.size() <= 1) {
        for (const Chunk& c : chunks) run_chunk(c);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= chunks.size()) break;
                run_chunk(chunks[i]);
            }
        };
        std::vector<std::thread> pool;
        const int nt = std::min<int>(threads, static_cast<int>(chunks.size()));
        pool.reserve(nt);
        for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace ssctm
