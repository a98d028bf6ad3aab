#include "ssctm/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssctm/errors.hpp"

namespace ssctm {

double control_term(const MeterView& mv, int ramp, double n_k) {
    const MeterView::Ramp& r = mv.ramp(ramp);
    if (!r.controlled) return std::numeric_limits<double>::infinity();
    return std::max(0.0, r.u - r.kappa * n_k);
}

double mainline_inflow(double q1, double n1, const HighwayConfig& cfg) {
    const CellParams& c = cfg.cells[0];
    const double supply = c.congestion_wave_speed_kmh * (c.jam_density_veh_per_km - n1);
    const double send = q1 > 0 ? cfg.buffers[0].capacity_veh_per_hr
                               : cfg.buffers[0].demand_veh_per_hr;
    return std::max(0.0, std::min(send, supply));
}

double onramp_flow(const HighwayConfig& cfg, const MeterView& mv, int k, double q_k,
                   double n_k) {
    const CellParams& c = cfg.cells[k - 1];
    const double supply = c.congestion_wave_speed_kmh * (c.jam_density_veh_per_km - n_k);
    const double send = q_k > 0 ? cfg.buffers[k - 1].capacity_veh_per_hr
                                : cfg.buffers[k - 1].demand_veh_per_hr;
    const double mu = control_term(mv, k, n_k);
    return std::max(0.0, std::min({send, supply, mu}));
}

double cell_outflow(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                    const MeterView& mv, int k, const HybridState& state) {
    const int K = cfg.num_cells();
    const CellParams& c = cfg.cells[k - 1];
    const double sending = c.free_flow_speed_kmh * state.densities_veh_per_km[k - 1];
    const double cap = markov.capacity(k - 1, state.mode - 1);
    if (k == K) return std::min(sending, cap);

    if (c.mainline_ratio <= 0)
        throw ValidationError("cells[" + std::to_string(k) + "].beta",
                              "interior cell with beta = 0");
    const CellParams& cn = cfg.cells[k];
    const double rnext =
        onramp_flow(cfg, mv, k + 1, state.queues_veh[k], state.densities_veh_per_km[k]);
    const double space =
        cn.congestion_wave_speed_kmh * (cn.jam_density_veh_per_km - state.densities_veh_per_km[k]);
    const double receiving = std::max(0.0, space - rnext) / c.mainline_ratio;
    return std::max(0.0, std::min({sending, cap, receiving}));
}

void dynamics(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
              const MeterView& mv, const HybridState& state, std::vector<double>& G,
              std::vector<double>& H) {
    const int K = cfg.num_cells();
    G.resize(K);
    H.resize(K);
    std::vector<double> r(K), f(K);
    r[0] = mainline_inflow(state.queues_veh[0], state.densities_veh_per_km[0], cfg);
    for (int k = 2; k <= K; ++k)
        r[k - 1] = onramp_flow(cfg, mv, k, state.queues_veh[k - 1],
                               state.densities_veh_per_km[k - 1]);
    for (int k = 1; k <= K; ++k) f[k - 1] = cell_outflow(cfg, markov, mv, k, state);

    for (int k = 0; k < K; ++k) {
        G[k] = cfg.buffers[k].demand_veh_per_hr - r[k];
        const double upstream = k == 0 ? 0.0 : cfg.cells[k - 1].mainline_ratio * f[k - 1];
        H[k] = (upstream + r[k] - f[k]) / cfg.cells[k].length_km;
    }
}

PwAffine onramp_flow_fn(const HighwayConfig& cfg, const MeterView& mv, int k,
                        bool queue_present, double lo, double hi) {
    const CellParams& c = cfg.cells[k - 1];
    const double send = queue_present ? cfg.buffers[k - 1].capacity_veh_per_hr
                                      : cfg.buffers[k - 1].demand_veh_per_hr;
    PwAffine f = pw_min(PwAffine::constant(lo, hi, send),
                        PwAffine::affine(lo, hi, c.congestion_wave_speed_kmh * c.jam_density_veh_per_km,
                                         -c.congestion_wave_speed_kmh));
    const MeterView::Ramp& ramp = mv.ramp(k);
    if (ramp.controlled) {
        PwAffine mu = pw_max(PwAffine::constant(lo, hi, 0.0),
                             PwAffine::affine(lo, hi, ramp.u, -ramp.kappa));
        f = pw_min(f, mu);
    }
    return pw_max(f, PwAffine::constant(lo, hi, 0.0));
}

PwAffine mainline_inflow_fn(const HighwayConfig& cfg, bool queue_present, double lo,
                            double hi) {
    const CellParams& c = cfg.cells[0];
    const double send = queue_present ? cfg.buffers[0].capacity_veh_per_hr
                                      : cfg.buffers[0].demand_veh_per_hr;
    PwAffine f = pw_min(PwAffine::constant(lo, hi, send),
                        PwAffine::affine(lo, hi, c.congestion_wave_speed_kmh * c.jam_density_veh_per_km,
                                         -c.congestion_wave_speed_kmh));
    return pw_max(f, PwAffine::constant(lo, hi, 0.0));
}

PwAffine receiving_fn(const HighwayConfig& cfg, const MeterView& mv, int k,
                      bool queue_present_next, double lo, double hi) {
    const CellParams& cn = cfg.cells[k];
    PwAffine space = PwAffine::affine(lo, hi, cn.congestion_wave_speed_kmh * cn.jam_density_veh_per_km,
                                      -cn.congestion_wave_speed_kmh);
    PwAffine r = onramp_flow_fn(cfg, mv, k + 1, queue_present_next, lo, hi);
    PwAffine net = pw_max(pw_add(space, pw_scale(r, -1.0)), PwAffine::constant(lo, hi, 0.0));
    return pw_scale(net, 1.0 / cfg.cells[k - 1].mainline_ratio);
}

namespace {

// Queue-present ramp flow for the boundary recursions. A buffer that never
// receives demand never queues, so its queue-present branch is vacuous.
PwAffine bounds_ramp_fn(const HighwayConfig& cfg, const MeterView& mv, int k, double lo,
                        double hi) {
    if (cfg.buffers[k - 1].demand_veh_per_hr <= 0.0)
        return PwAffine::constant(lo, hi, 0.0);
    return onramp_flow_fn(cfg, mv, k, true, lo, hi);
}

double bounds_ramp_flow(const HighwayConfig& cfg, const MeterView& mv, int k, double n) {
    if (cfg.buffers[k - 1].demand_veh_per_hr <= 0.0) return 0.0;
    return onramp_flow(cfg, mv, k, 1.0, n);
}

}  // namespace

DensityBounds density_bounds(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                             const MeterView& mv) {
    const int K = cfg.num_cells();
    DensityBounds b;
    b.lower_no_queue.resize(K);
    b.lower_with_queue.resize(K);
    b.upper_free.resize(K);
    b.upper_blocked.resize(K);

    // Forward recursion for the no-queue lower bounds.
    for (int k = 0; k < K; ++k) {
        const CellParams& c = cfg.cells[k];
        const double fmax = markov.max_capacity(k);
        if (k == 0) {
            b.lower_no_queue[0] = std::min(cfg.buffers[0].demand_veh_per_hr, fmax) /
                                  c.free_flow_speed_kmh;
        } else {
            const CellParams& cp = cfg.cells[k - 1];
            const double arriving =
                cp.mainline_ratio * std::min(cp.free_flow_speed_kmh * b.lower_no_queue[k - 1],
                                             markov.min_capacity(k - 1));
            b.lower_no_queue[k] =
                std::min(arriving + cfg.buffers[k].demand_veh_per_hr, fmax) /
                c.free_flow_speed_kmh;
        }
    }

    // Queue-present lower bounds; cells >= 2 solve a monotone piecewise
    // linear equation in the density.
    b.lower_with_queue[0] =
        std::min(cfg.buffers[0].capacity_veh_per_hr, markov.max_capacity(0)) /
        cfg.cells[0].free_flow_speed_kmh;
    for (int k = 1; k < K; ++k) {
        const CellParams& c = cfg.cells[k];
        const CellParams& cp = cfg.cells[k - 1];
        const double base =
            cp.mainline_ratio * std::min(cp.free_flow_speed_kmh * b.lower_no_queue[k - 1],
                                         markov.min_capacity(k - 1));
        PwAffine r = bounds_ramp_fn(cfg, mv, k + 1, 0.0, c.jam_density_veh_per_km);
        PwAffine g = pw_add(pw_shift(r, base),
                            PwAffine::affine(0.0, c.jam_density_veh_per_km, 0.0,
                                             -c.free_flow_speed_kmh));
        const auto root = g.first_root();
        if (!root)
            throw NoRoot("no density balances queue-present inflow for cell " +
                         std::to_string(k + 1));
        b.lower_with_queue[k] =
            std::min(*root, markov.max_capacity(k) / c.free_flow_speed_kmh);
    }

    // Upper bounds; blocked bounds run backward through the minimum
    // receiving flow of the downstream cell.
    for (int k = 0; k < K; ++k) {
        const CellParams& c = cfg.cells[k];
        b.upper_free[k] =
            c.jam_density_veh_per_km - markov.min_capacity(k) / c.congestion_wave_speed_kmh;
    }
    b.upper_blocked[K - 1] = b.upper_free[K - 1];
    for (int k = K - 2; k >= 0; --k) {
        const CellParams& c = cfg.cells[k];
        const CellParams& cn = cfg.cells[k + 1];
        const double lo = b.lower_no_queue[k + 1];
        const double hi = b.upper_blocked[k + 1];
        double rmin;
        if (hi - lo < 1e-12) {
            const double x = lo;
            rmin = cn.congestion_wave_speed_kmh * (cn.jam_density_veh_per_km - x) -
                   bounds_ramp_flow(cfg, mv, k + 2, x);
        } else {
            PwAffine space = PwAffine::affine(lo, hi,
                                              cn.congestion_wave_speed_kmh * cn.jam_density_veh_per_km,
                                              -cn.congestion_wave_speed_kmh);
            PwAffine r = bounds_ramp_fn(cfg, mv, k + 2, lo, hi);
            rmin = pw_add(space, pw_scale(r, -1.0)).min_value_arg().first;
        }
        b.upper_blocked[k] =
            c.jam_density_veh_per_km -
            std::min(markov.min_capacity(k), rmin / c.mainline_ratio) /
                c.congestion_wave_speed_kmh;
    }
    return b;
}

DensityBounds density_bounds(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                             const AffineControlPolicy& policy) {
    return density_bounds(cfg, markov, MeterView::from_policy(policy));
}

}  // namespace ssctm
