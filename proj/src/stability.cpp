#include "ssctm/stability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ssctm/detail/inner.hpp"
#include "ssctm/errors.hpp"
#include "ssctm/markov.hpp"

namespace ssctm {

std::string to_string(DesignVariant v) {
    switch (v) {
        case DesignVariant::Localized: return "localized";
        case DesignVariant::FullyCoordinated: return "fully-coordinated";
        case DesignVariant::PartiallyCoordinated: return "partially-coordinated";
    }
    return "?";
}

double WeightFn::eval(double x) const {
    switch (kind) {
        case One: return 1.0;
        case Step: return x >= a - 1e-12 * std::max(1.0, std::abs(a)) ? 1.0 : 0.0;
        case Affine: {
            const double v = (x - a) / (b - a);
            return clamp01 ? std::clamp(v, 0.0, 1.0) : v;
        }
    }
    return 1.0;
}

namespace {

WeightFn affine_or_step(double a, double b, bool clamp01) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    if (b - a <= 1e-9 * scale) return WeightFn{WeightFn::Step, a, b, false};
    return WeightFn{WeightFn::Affine, a, b, clamp01};
}

}  // namespace

WeightScheme localized_weights(const DensityBounds& b) {
    WeightScheme w;
    const int K = static_cast<int>(b.lower_no_queue.size());
    w.rho.assign(K, WeightFn{WeightFn::One, 0, 1, false});
    for (int j = 1; j < K; ++j)
        w.rho[j] = affine_or_step(b.lower_no_queue[j], b.upper_free[j], false);
    return w;
}

WeightScheme fully_coordinated_weights(const DensityBounds& b) {
    WeightScheme w;
    const int K = static_cast<int>(b.lower_no_queue.size());
    w.rho.assign(K, WeightFn{WeightFn::One, 0, 1, false});
    for (int j = 1; j < K; ++j)
        w.rho[j] = affine_or_step(b.lower_no_queue[j], b.upper_blocked[j], false);
    return w;
}

WeightScheme partially_coordinated_weights(const DensityBounds& b, int buffer_k,
                                           PcWeightMode mode) {
    WeightScheme w;
    const int K = static_cast<int>(b.lower_no_queue.size());
    w.rho.assign(K, WeightFn{WeightFn::One, 0, 1, false});
    for (int j = buffer_k; j <= K; ++j) {
        const int i = j - 1;
        switch (mode) {
            case PcWeightMode::LowerAnchored:
                w.rho[i] = affine_or_step(b.lower_no_queue[i], b.upper_blocked[i], false);
                break;
            case PcWeightMode::PrintedClamped:
                w.rho[i] = affine_or_step(b.upper_free[i], b.upper_blocked[i], true);
                break;
            case PcWeightMode::PrintedRaw: {
                const double scale =
                    std::max({1.0, std::abs(b.upper_free[i]), std::abs(b.upper_blocked[i])});
                if (b.upper_blocked[i] - b.upper_free[i] <= 1e-9 * scale)
                    throw ValidationError("pc-weights",
                                          "raw printed weight undefined for decoupled cell " +
                                              std::to_string(j));
                w.rho[i] = WeightFn{WeightFn::Affine, b.upper_free[i], b.upper_blocked[i], false};
                break;
            }
        }
    }
    return w;
}

CongestionSet congestion_set(DesignVariant scheme, const DensityBounds& b, int buffer_k,
                             int K, const std::vector<char>& zero_demand) {
    CongestionSet set;
    set.buffer = buffer_k;
    set.boxes =
        detail::enumerate_family(detail::set_family(scheme, b, buffer_k, K, zero_demand));
    return set;
}

std::vector<CongestionSet> congestion_sets(DesignVariant scheme, const DensityBounds& b,
                                           int K) {
    std::vector<CongestionSet> out;
    out.reserve(K);
    for (int k = 1; k <= K; ++k) out.push_back(congestion_set(scheme, b, k, K));
    return out;
}

bool InvariantSet::contains(const std::vector<double>& q, const std::vector<double>& n,
                            double tol) const {
    for (const StateBox& box : boxes) {
        bool ok = true;
        for (size_t j = 0; j < q.size() && ok; ++j) {
            if ((q[j] > 0) != (box.queue[j] == 1)) ok = false;
        }
        for (size_t j = 0; j < n.size() && ok; ++j) {
            if (n[j] < box.dens[j].lo - tol || n[j] > box.dens[j].hi + tol) ok = false;
        }
        if (ok) return true;
    }
    return false;
}

InvariantSet invariant_set(DesignVariant scheme, const DensityBounds& b, int K) {
    (void)scheme;  // same box family for every scheme, bounds differ by policy
    InvariantSet s;
    const int combos = 1 << K;
    s.boxes.reserve(combos);
    for (int mask = 0; mask < combos; ++mask) {
        StateBox box;
        box.queue.resize(K);
        box.dens.resize(K);
        for (int j = 0; j < K; ++j) {
            box.queue[j] = (mask >> j) & 1;
            box.dens[j] = box.queue[j] ? Interval{b.lower_with_queue[j], b.upper_blocked[j]}
                                       : Interval{b.lower_no_queue[j], b.upper_blocked[j]};
        }
        s.boxes.push_back(std::move(box));
    }
    return s;
}

double gamma(int j, int k, const std::vector<double>& betas) {
    double g = 1.0;
    for (int l = j; l < k; ++l) g *= betas[l - 1];
    return g;
}

double gamma_tilde(int j, int k, const std::vector<double>& betas) {
    return j <= k ? gamma(j, k, betas) : gamma(k, j, betas);
}

double weighted_net_flow(DesignVariant scheme, int buffer_k, const HybridState& state,
                         const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                         const MeterView& mv, const WeightScheme& weights) {
    (void)scheme;
    const int K = cfg.num_cells();
    std::vector<double> betas(K);
    for (int k = 0; k < K; ++k) betas[k] = cfg.cells[k].mainline_ratio;
    std::vector<double> G, H;
    dynamics(cfg, markov, mv, state, G, H);
    double out = 0.0;
    for (int j = 1; j <= K; ++j) {
        const double rho = weights.rho[j - 1].eval(state.densities_veh_per_km[j - 1]);
        out += gamma_tilde(j, buffer_k, betas) *
               (G[j - 1] + cfg.cells[j - 1].length_km * rho * H[j - 1]);
    }
    return out;
}

InnerMax max_net_flow_over_set(DesignVariant scheme, int buffer_k, int mode,
                               const CongestionSet& set, const HighwayConfig& cfg,
                               const MarkovCapacityModel& markov, const MeterView& mv,
                               const WeightScheme& weights, const DriftOptions& opts) {
    detail::InnerProblem p =
        detail::make_problem(scheme, buffer_k, mode, cfg, markov, mv, weights);
    InnerMax best;
    best.value = -std::numeric_limits<double>::infinity();
    for (const StateBox& box : set.boxes) {
        int free_axes = 0;
        for (const Interval& iv : box.dens)
            if (!iv.pinned()) ++free_axes;
        InnerMax m;
        if (free_axes <= opts.exact_axis_limit) {
            m = detail::exact_box_max(p, box);
        } else if (opts.allow_fallback) {
            // Per-box family with fixed indicators.
            detail::SetFamily fam;
            fam.buffer = buffer_k;
            const int K = cfg.num_cells();
            fam.ind.resize(K);
            fam.dens0.resize(K);
            fam.dens1.resize(K);
            for (int j = 0; j < K; ++j) {
                fam.ind[j] = box.queue[j];
                fam.dens0[j] = box.dens[j];
                fam.dens1[j] = box.dens[j];
            }
            fam.first_cell = 1;
            m = detail::family_dp_max(p, fam, opts.fallback_grid);
        } else {
            throw Unsupported("inner maximization exceeds exact-solver limit");
        }
        if (m.value > best.value) best = m;
    }
    return best;
}

namespace {

WeightScheme scheme_weights(DesignVariant scheme, const DensityBounds& bounds,
                            int buffer_k, const DriftOptions& opts) {
    switch (scheme) {
        case DesignVariant::Localized: return localized_weights(bounds);
        case DesignVariant::FullyCoordinated: return fully_coordinated_weights(bounds);
        case DesignVariant::PartiallyCoordinated:
            return partially_coordinated_weights(bounds, buffer_k, opts.pc_weights);
    }
    return {};
}

std::vector<char> zero_demand_mask(const HighwayConfig& cfg) {
    std::vector<char> mask(cfg.num_cells(), 0);
    for (int k = 0; k < cfg.num_cells(); ++k)
        mask[k] = cfg.buffers[k].demand_veh_per_hr <= 0.0 ? 1 : 0;
    return mask;
}

InnerMax buffer_mode_max(DesignVariant scheme, int buffer_k, int mode,
                         const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                         const MeterView& mv, const DensityBounds& bounds,
                         const DriftOptions& opts) {
    const int K = cfg.num_cells();
    const WeightScheme weights = scheme_weights(scheme, bounds, buffer_k, opts);
    const detail::SetFamily fam =
        detail::set_family(scheme, bounds, buffer_k, K, zero_demand_mask(cfg));
    int free_axes = 0;
    for (int j = 0; j < K; ++j) {
        const Interval iv = fam.ind[j] == 0 ? fam.dens0[j]
                           : fam.ind[j] == 1
                               ? fam.dens1[j]
                               : Interval{std::min(fam.dens0[j].lo, fam.dens1[j].lo),
                                          std::max(fam.dens0[j].hi, fam.dens1[j].hi)};
        if (!iv.pinned()) ++free_axes;
    }
    detail::InnerProblem p =
        detail::make_problem(scheme, buffer_k, mode, cfg, markov, mv, weights);
    if (free_axes <= opts.exact_axis_limit) {
        InnerMax best;
        best.value = -std::numeric_limits<double>::infinity();
        for (const StateBox& box : detail::enumerate_family(fam)) {
            const InnerMax m = detail::exact_box_max(p, box);
            if (m.value > best.value) best = m;
        }
        return best;
    }
    if (!opts.allow_fallback)
        throw Unsupported("inner maximization exceeds exact-solver limit");
    return detail::family_dp_max(p, fam, opts.fallback_grid);
}

}  // namespace

double buffer_mean_drift(DesignVariant scheme, int buffer_k, const HighwayConfig& cfg,
                         const MarkovCapacityModel& markov, const MeterView& mv,
                         const DensityBounds& bounds, const std::vector<double>& p,
                         const DriftOptions& opts) {
    double mean = 0.0;
    for (int s = 1; s <= markov.mode_count; ++s)
        mean += p[s - 1] * buffer_mode_max(scheme, buffer_k, s, cfg, markov, mv, bounds, opts).value;
    return mean;
}

DriftReport mean_drift(DesignVariant scheme, const HighwayConfig& cfg,
                       const MarkovCapacityModel& markov, const MeterView& mv,
                       const DriftOptions& opts) {
    const int K = cfg.num_cells();
    const std::vector<double> p = steady_state_probs(markov);
    const DensityBounds bounds = density_bounds(cfg, markov, mv);

    DriftReport rep;
    rep.scheme = scheme;
    rep.per_buffer_mode.assign(K, std::vector<DriftEntry>(markov.mode_count));
    rep.buffer_mean.assign(K, 0.0);
    const std::vector<char> zero = zero_demand_mask(cfg);
    for (int k = 1; k <= K; ++k) {
        if (zero[k - 1]) {
            // A demandless buffer never queues; it cannot bind.
            rep.buffer_mean[k - 1] = -std::numeric_limits<double>::infinity();
            continue;
        }
        for (int s = 1; s <= markov.mode_count; ++s) {
            const InnerMax m = buffer_mode_max(scheme, k, s, cfg, markov, mv, bounds, opts);
            rep.per_buffer_mode[k - 1][s - 1] = DriftEntry{m.value, m.argmax};
            rep.buffer_mean[k - 1] += p[s - 1] * m.value;
        }
    }
    rep.binding_buffer = 1;
    rep.mean_drift = rep.buffer_mean[0];
    for (int k = 2; k <= K; ++k) {
        if (rep.buffer_mean[k - 1] > rep.mean_drift) {
            rep.mean_drift = rep.buffer_mean[k - 1];
            rep.binding_buffer = k;
        }
    }
    rep.stable = rep.mean_drift < -opts.stability_eps;
    rep.queue_bound_proxy =
        rep.stable ? -1.0 / rep.mean_drift : std::numeric_limits<double>::infinity();
    return rep;
}

DriftReport mean_drift(DesignVariant scheme, const HighwayConfig& cfg,
                       const MarkovCapacityModel& markov, const AffineControlPolicy& policy,
                       const DriftOptions& opts) {
    return mean_drift(scheme, cfg, markov, MeterView::from_policy(policy), opts);
}

LyapunovCertificate solve_b_system(const std::vector<std::vector<double>>& z,
                                   const MarkovCapacityModel& markov,
                                   const std::vector<double>& p) {
    const int m = markov.mode_count;
    const int K = static_cast<int>(z.size());
    LyapunovCertificate cert;
    cert.b.assign(K, std::vector<double>(m, 0.0));
    if (m == 1) return cert;

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    for (int s = 0; s < m; ++s) {
        double out = 0.0;
        for (int t = 0; t < m; ++t) {
            if (t == s) continue;
            L(s, t) = markov.transition_rates_per_hr[s][t];
            out += L(s, t);
        }
        L(s, s) = -out;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> rank_check(L);
    rank_check.setThreshold(1e-12);
    if (rank_check.rank() != m - 1)
        throw SingularChain("generator rank " + std::to_string(rank_check.rank()) +
                            ", expected " + std::to_string(m - 1));

    // Anchor b_{k,1} = 0, then shift to a non-negative solution with
    // min_s b_{k,s} = 0. The kernel is the constant vector.
    Eigen::MatrixXd A(m + 1, m);
    A.topRows(m) = L;
    A.row(m).setZero();
    A(m, 0) = 1.0;

    for (int k = 0; k < K; ++k) {
        double zbar = 0.0;
        for (int s = 0; s < m; ++s) zbar += p[s] * z[k][s];
        Eigen::VectorXd rhs(m + 1);
        for (int s = 0; s < m; ++s) rhs(s) = zbar - z[k][s];
        rhs(m) = 0.0;
        const Eigen::VectorXd bk = A.colPivHouseholderQr().solve(rhs);
        double lo = bk.minCoeff();
        double resid = 0.0;
        for (int s = 0; s < m; ++s) {
            double lhs = z[k][s];
            for (int t = 0; t < m; ++t)
                lhs += markov.transition_rates_per_hr[s][t] * (bk(t) - bk(s));
            resid = std::max(resid, std::abs(lhs - zbar));
        }
        cert.residual = std::max(cert.residual, resid);
        for (int s = 0; s < m; ++s) cert.b[k][s] = bk(s) - lo;
    }
    return cert;
}

std::vector<bool> check_decoupling(const HighwayConfig& cfg,
                                   const MarkovCapacityModel& markov, const MeterView& mv,
                                   const DensityBounds& bounds) {
    const int K = cfg.num_cells();
    std::vector<bool> out(std::max(0, K - 1), false);
    for (int k = 1; k < K; ++k) {
        const CellParams& cn = cfg.cells[k];
        const double lo = bounds.lower_no_queue[k];
        const double hi = bounds.upper_free[k];
        const double rhs = cfg.cells[k - 1].mainline_ratio * markov.max_capacity(k - 1);
        const bool vacuous = cfg.buffers[k].demand_veh_per_hr <= 0.0;
        double worst;
        if (hi - lo < 1e-12) {
            worst = cn.congestion_wave_speed_kmh * (cn.jam_density_veh_per_km - lo) -
                    (vacuous ? 0.0 : onramp_flow(cfg, mv, k + 1, 1.0, lo));
        } else {
            PwAffine space =
                PwAffine::affine(lo, hi, cn.congestion_wave_speed_kmh * cn.jam_density_veh_per_km,
                                 -cn.congestion_wave_speed_kmh);
            PwAffine r = vacuous ? PwAffine::constant(lo, hi, 0.0)
                                 : onramp_flow_fn(cfg, mv, k + 1, true, lo, hi);
            worst = pw_add(space, pw_scale(r, -1.0)).min_value_arg().first;
        }
        out[k - 1] = worst >= rhs - 1e-9;
    }
    return out;
}

Corollary1Verdict corollary1_verdict(const HighwayConfig& cfg,
                                     const MarkovCapacityModel& markov,
                                     const MeterView& mv) {
    Corollary1Verdict v;
    if (cfg.num_cells() != 2) return v;
    const std::vector<double> p = steady_state_probs(markov);
    const DensityBounds bounds = density_bounds(cfg, markov, mv);

    const double f1max = markov.max_capacity(0);
    const double f1min = markov.min_capacity(0);
    const double f2max = markov.max_capacity(1);
    const double n2c = critical_density(cfg, markov, 1);
    const double beta1 = cfg.cells[0].mainline_ratio;

    const bool c1 = cfg.buffers[0].capacity_veh_per_hr >= f1max - 1e-9;
    const bool c2 = beta1 * f1min + onramp_flow(cfg, mv, 2, 0.0, n2c) >= f2max - 1e-9;
    const bool c3 = beta1 * cfg.buffers[0].demand_veh_per_hr +
                        onramp_flow(cfg, mv, 2, 1.0, n2c) >=
                    f2max - 1e-9;
    const bool dec = check_decoupling(cfg, markov, mv, bounds)[0];
    v.applicable = c1 && c2 && c3 && dec;
    if (!v.applicable) return v;

    const CapacityStats s1 = capacity_stats(markov, p, 0);
    const CapacityStats s2 = capacity_stats(markov, p, 1);
    const double a1 = cfg.buffers[0].demand_veh_per_hr;
    const double a2 = cfg.buffers[1].demand_veh_per_hr;
    v.stable_iff = a1 < s1.mean && beta1 * a1 + a2 < s2.mean;
    return v;
}

bool corollary2_equivalence_check(const HighwayConfig& cfg,
                                  const MarkovCapacityModel& markov,
                                  const AffineControlPolicy& pc_policy, double tol) {
    const int K = cfg.num_cells();
    const MeterView mv = MeterView::from_policy(pc_policy);
    const DensityBounds bounds = density_bounds(cfg, markov, mv);
    const std::vector<bool> dec = check_decoupling(cfg, markov, mv, bounds);
    for (bool d : dec)
        if (!d) return false;

    for (int k = 2; k <= K; ++k) {
        const double fkmax = markov.max_capacity(k - 1);
        const double fkminp = markov.min_capacity(k - 2);
        const double nkc = critical_density(cfg, markov, k - 1);
        const double beta = cfg.cells[k - 2].mainline_ratio;
        if (beta * fkminp + onramp_flow(cfg, mv, k, 0.0, nkc) < fkmax - 1e-9) return false;
        std::vector<double> betas(K);
        for (int j = 0; j < K; ++j) betas[j] = cfg.cells[j].mainline_ratio;
        double demand = 0.0;
        for (int i = 1; i < k; ++i)
            demand += gamma(i, k, betas) * cfg.buffers[i - 1].demand_veh_per_hr;
        if (demand + onramp_flow(cfg, mv, k, 1.0, nkc) < fkmax - 1e-9) return false;
    }
    if (cfg.buffers[0].capacity_veh_per_hr < markov.max_capacity(0) - 1e-9) return false;

    // Conditions hold: the per-buffer unweighted objectives of both schemes
    // should agree at this policy.
    DriftOptions opts;
    WeightScheme ones;
    ones.rho.assign(K, WeightFn{WeightFn::One, 0, 1, false});
    const std::vector<double> p = steady_state_probs(markov);
    for (int k = 1; k <= K; ++k) {
        double fc = 0.0, pc = 0.0;
        for (int s = 1; s <= markov.mode_count; ++s) {
            detail::InnerProblem prob = detail::make_problem(
                DesignVariant::FullyCoordinated, k, s, cfg, markov, mv, ones);
            const detail::SetFamily fam_fc =
                detail::set_family(DesignVariant::FullyCoordinated, bounds, k, K);
            const detail::SetFamily fam_pc =
                detail::set_family(DesignVariant::PartiallyCoordinated, bounds, k, K);
            InnerMax best_fc, best_pc;
            best_fc.value = best_pc.value = -std::numeric_limits<double>::infinity();
            for (const StateBox& box : detail::enumerate_family(fam_fc))
                best_fc.value = std::max(best_fc.value, detail::exact_box_max(prob, box).value);
            for (const StateBox& box : detail::enumerate_family(fam_pc))
                best_pc.value = std::max(best_pc.value, detail::exact_box_max(prob, box).value);
            fc += p[s - 1] * best_fc.value;
            pc += p[s - 1] * best_pc.value;
        }
        if (std::abs(fc - pc) > tol * std::max(1.0, std::abs(fc))) return false;
    }
    return true;
}

}  // namespace ssctm
