#include "ssctm/design.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "ssctm/errors.hpp"
#include "ssctm/markov.hpp"

namespace ssctm {

std::vector<double> GridRange::values() const {
    std::vector<double> out;
    if (step <= 0 || hi < lo) throw ValidationError("grid", "need lo <= hi and step > 0");
    for (double x = lo; x <= hi + 1e-9 * std::max(1.0, std::abs(hi)); x += step)
        out.push_back(x);
    return out;
}

GridSpec GridSpec::defaults() {
    GridSpec g;
    g.u = {GridRange{2500, 6000, 50}};
    g.kappa = {GridRange{0, 50, 1}};
    return g;
}

namespace {

GridRange range_for(const std::vector<GridRange>& ranges, int ramp_idx) {
    if (ranges.empty()) throw ValidationError("grid", "empty range list");
    if (ranges.size() == 1) return ranges[0];
    return ranges.at(ramp_idx);
}

// Candidate order is lexicographic in (u_2..u_K, kappa_2..kappa_K); the
// search prefers earlier candidates on ties.
bool lex_less(const std::vector<double>& au, const std::vector<double>& ak,
              const std::vector<double>& bu, const std::vector<double>& bk) {
    for (size_t i = 0; i < au.size(); ++i) {
        if (au[i] != bu[i]) return au[i] < bu[i];
    }
    for (size_t i = 0; i < ak.size(); ++i) {
        if (ak[i] != bk[i]) return ak[i] < bk[i];
    }
    return false;
}

struct SearchBest {
    bool any = false;
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> u, kappa;
};

void consider(SearchBest& best, double obj, const std::vector<double>& u,
              const std::vector<double>& kappa, double tie_tol) {
    if (!std::isfinite(obj)) return;
    if (!best.any) {
        best.any = true;
        best.objective = obj;
        best.u = u;
        best.kappa = kappa;
        return;
    }
    const double tol = tie_tol * std::max(1.0, std::abs(best.objective));
    if (obj < best.objective - tol) {
        best.objective = obj;
        best.u = u;
        best.kappa = kappa;
    } else if (obj <= best.objective + tol && lex_less(u, kappa, best.u, best.kappa)) {
        best.objective = std::min(best.objective, obj);
        best.u = u;
        best.kappa = kappa;
    }
}

template <typename Eval>
void parallel_scan(size_t count, int threads, std::vector<double>& out, Eval eval) {
    out.assign(count, std::numeric_limits<double>::quiet_NaN());
    if (threads <= 1) {
        for (size_t i = 0; i < count; ++i) out[i] = eval(i);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= count) break;
            out[i] = eval(i);
        }
    };
    std::vector<std::thread> pool;
    const int nt = std::min<size_t>(threads, count);
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

MeterView single_ramp_view(int K, int ramp, double u, double kappa) {
    MeterView mv = MeterView::none(K);
    mv.ramps[ramp - 2] = MeterView::Ramp{true, u, kappa};
    return mv;
}

double drift_objective(DesignVariant scheme, const HighwayConfig& cfg,
                       const MarkovCapacityModel& markov, const MeterView& mv,
                       const DriftOptions& opts) {
    try {
        return mean_drift(scheme, cfg, markov, mv, opts).mean_drift;
    } catch (const NoRoot&) {
        return std::numeric_limits<double>::infinity();
    }
}

DriftReport report_at(DesignVariant scheme, const HighwayConfig& cfg,
                      const MarkovCapacityModel& markov, const AffineControlPolicy& pol,
                      const DriftOptions& opts) {
    return mean_drift(scheme, cfg, markov, MeterView::from_policy(pol), opts);
}

}  // namespace

DesignResult design_localized(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                              const GridSpec& grid, const DesignOptions& opts) {
    if (cfg.num_cells() != 2)
        throw TooLarge("localized design is defined for the two-cell section");
    const std::vector<double> us = range_for(grid.u, 0).values();
    const std::vector<double> ks = range_for(grid.kappa, 0).values();
    const size_t count = us.size() * ks.size();
    if (count > grid.max_candidates) throw TooLarge("grid exceeds the candidate cap");

    std::vector<double> obj;
    parallel_scan(count, opts.threads, obj, [&](size_t i) {
        const double u = us[i / ks.size()];
        const double kap = ks[i % ks.size()];
        return drift_objective(DesignVariant::Localized, cfg, markov,
                               single_ramp_view(2, 2, u, kap), opts.drift);
    });

    DesignResult res;
    SearchBest best;
    for (size_t i = 0; i < count; ++i) {
        const double u = us[i / ks.size()];
        const double kap = ks[i % ks.size()];
        consider(best, obj[i], {u}, {kap}, opts.tie_tol);
        if (opts.keep_surface)
            res.surface.push_back(CandidatePoint{{u}, {kap}, obj[i],
                                                 obj[i] < -opts.drift.stability_eps});
    }
    if (!best.any) throw NoRoot("no evaluable grid candidate");
    res.policy = AffineControlPolicy{best.u, best.kappa};
    res.objective = best.objective;
    res.feasible = best.objective < -opts.drift.stability_eps;
    res.report = report_at(DesignVariant::Localized, cfg, markov, res.policy, opts.drift);
    return res;
}

DesignResult design_localized_throughput(const HighwayConfig& cfg,
                                         const MarkovCapacityModel& markov,
                                         const GridSpec& grid,
                                         const DesignOptions& opts) {
    if (cfg.num_cells() != 2)
        throw TooLarge("localized design is defined for the two-cell section");
    const double alpha_full = cfg.buffers[0].demand_veh_per_hr;

    auto try_demand = [&](double a1) -> std::optional<DesignResult> {
        HighwayConfig trial = cfg;
        trial.buffers[0].demand_veh_per_hr = std::min(a1, trial.buffers[0].capacity_veh_per_hr);
        DesignResult r = design_localized(trial, markov, grid, opts);
        if (r.feasible) return r;
        return std::nullopt;
    };

    if (auto r = try_demand(alpha_full)) {
        r->objective = alpha_full;
        return *r;
    }

    const double tol = 1.0;  // veh/hr
    double lo = 0.0, hi = alpha_full;
    std::optional<DesignResult> witness = try_demand(tol);
    if (!witness) {
        DesignResult res;
        res.feasible = false;
        res.objective = 0.0;
        return res;
    }
    lo = tol;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (auto r = try_demand(mid)) {
            witness = r;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    witness->objective = lo;
    witness->feasible = true;
    return *witness;
}

DesignResult design_full(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                         const GridSpec& grid, const DesignOptions& opts) {
    const int K = cfg.num_cells();
    if (K > 3) throw TooLarge("joint synthesis supports up to three cells exactly");
    const int nr = K - 1;

    std::vector<std::vector<double>> us(nr), ks(nr);
    size_t count = 1;
    for (int r = 0; r < nr; ++r) {
        us[r] = range_for(grid.u, r).values();
        ks[r] = range_for(grid.kappa, r).values();
        count *= us[r].size() * ks[r].size();
    }
    if (count > grid.max_candidates) throw TooLarge("grid exceeds the candidate cap");

    auto decode = [&](size_t idx) {
        std::vector<double> u(nr), kap(nr);
        for (int r = nr - 1; r >= 0; --r) {
            const size_t nk = ks[r].size();
            kap[r] = ks[r][idx % nk];
            idx /= nk;
            const size_t nu = us[r].size();
            u[r] = us[r][idx % nu];
            idx /= nu;
        }
        return std::pair(u, kap);
    };

    std::vector<double> obj;
    parallel_scan(count, opts.threads, obj, [&](size_t i) {
        auto [u, kap] = decode(i);
        MeterView mv = MeterView::none(K);
        for (int r = 0; r < nr; ++r) {
            if (!opts.metered.empty() && !opts.metered[r]) continue;
            mv.ramps[r] = MeterView::Ramp{true, u[r], kap[r]};
        }
        return drift_objective(DesignVariant::FullyCoordinated, cfg, markov, mv, opts.drift);
    });

    DesignResult res;
    SearchBest best;
    for (size_t i = 0; i < count; ++i) {
        auto [u, kap] = decode(i);
        consider(best, obj[i], u, kap, opts.tie_tol);
        if (opts.keep_surface)
            res.surface.push_back(
                CandidatePoint{u, kap, obj[i], obj[i] < -opts.drift.stability_eps});
    }
    if (!best.any) throw NoRoot("no evaluable grid candidate");
    res.policy = AffineControlPolicy{best.u, best.kappa};
    res.objective = best.objective;
    res.feasible = best.objective < -opts.drift.stability_eps;
    res.report =
        report_at(DesignVariant::FullyCoordinated, cfg, markov, res.policy, opts.drift);
    return res;
}

DesignResult design_partial(const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                            const GridSpec& grid, const DesignOptions& opts) {
    const int K = cfg.num_cells();
    if (K < 2) throw TooLarge("need at least one ramp");
    const std::vector<double> p = steady_state_probs(markov);

    MeterView assembled = MeterView::none(K);
    std::vector<double> u_out(K - 1, 1.0), k_out(K - 1, 1.0);

    for (int k = K; k >= 2; --k) {
        if (!opts.metered.empty() && !opts.metered[k - 2]) continue;
        const std::vector<double> us = range_for(grid.u, k - 2).values();
        const std::vector<double> ks = range_for(grid.kappa, k - 2).values();
        const size_t count = us.size() * ks.size();
        if (count > grid.max_candidates) throw TooLarge("grid exceeds the candidate cap");

        std::vector<double> obj;
        parallel_scan(count, opts.threads, obj, [&](size_t i) {
            MeterView mv = assembled;
            mv.ramps[k - 2] =
                MeterView::Ramp{true, us[i / ks.size()], ks[i % ks.size()]};
            try {
                const DensityBounds b = density_bounds(cfg, markov, mv);
                return buffer_mean_drift(DesignVariant::PartiallyCoordinated, k, cfg,
                                         markov, mv, b, p, opts.drift);
            } catch (const NoRoot&) {
                return std::numeric_limits<double>::infinity();
            }
        });

        SearchBest best;
        for (size_t i = 0; i < count; ++i)
            consider(best, obj[i], {us[i / ks.size()]}, {ks[i % ks.size()]}, opts.tie_tol);
        if (!best.any || best.objective >= -opts.drift.stability_eps)
            throw SubproblemInfeasible(
                k, "stage for ramp " + std::to_string(k) + " admits no stabilizing point");
        assembled.ramps[k - 2] = MeterView::Ramp{true, best.u[0], best.kappa[0]};
        u_out[k - 2] = best.u[0];
        k_out[k - 2] = best.kappa[0];
    }

    DesignResult res;
    res.policy = AffineControlPolicy{u_out, k_out};
    res.report = mean_drift(DesignVariant::PartiallyCoordinated, cfg, markov, assembled,
                            opts.drift);
    res.objective = res.report.mean_drift;
    res.feasible = res.report.stable;
    return res;
}

DesignResult design_partial_throughput(const HighwayConfig& cfg,
                                       const MarkovCapacityModel& markov,
                                       const GridSpec& grid, const DesignOptions& opts) {
    auto try_demand = [&](double a1) -> std::optional<DesignResult> {
        HighwayConfig trial = cfg;
        trial.buffers[0].demand_veh_per_hr = a1;
        try {
            DesignResult r = design_partial(trial, markov, grid, opts);
            if (r.feasible) return r;
        } catch (const SubproblemInfeasible&) {
        } catch (const NoRoot&) {
        }
        return std::nullopt;
    };
    const double alpha_full = cfg.buffers[0].demand_veh_per_hr;
    if (auto r = try_demand(alpha_full)) return *r;
    const double tol = std::max(1.0, alpha_full / 4096.0);
    double lo = 0.0, hi = alpha_full;
    std::optional<DesignResult> witness = try_demand(tol);
    if (!witness) {
        DesignResult res;
        res.feasible = false;
        return res;
    }
    lo = tol;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (auto r = try_demand(mid)) {
            witness = r;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    witness->objective = lo;
    return *witness;
}

DesignResult design_localized_network(const HighwayConfig& cfg,
                                      const MarkovCapacityModel& markov,
                                      const GridSpec& grid,
                                      const std::vector<bool>& metered,
                                      const DesignOptions& opts) {
    const int K = cfg.num_cells();
    if (K == 2) return design_localized(cfg, markov, grid, opts);

    std::vector<double> betas(K);
    for (int k = 0; k < K; ++k) betas[k] = cfg.cells[k].mainline_ratio;

    std::vector<double> u_out(K - 1, 1.0), k_out(K - 1, 1.0);
    bool all_feasible = true;
    for (int k = 2; k <= K; ++k) {
        if (!metered.empty() && !metered[k - 2]) continue;
        // Two-cell section: cells (k-1, k); the upstream buffer carries the
        // gamma-weighted demand arriving at cell k-1 and never binds.
        HighwayConfig sub;
        sub.cells = {cfg.cells[k - 2], cfg.cells[k - 1]};
        sub.cells[0].mainline_ratio = cfg.cells[k - 2].mainline_ratio;
        sub.cells[1].mainline_ratio = 0.0;
        double arriving = 0.0;
        for (int j = 1; j <= k - 1; ++j)
            arriving += gamma(j, k - 1, betas) * cfg.buffers[j - 1].demand_veh_per_hr;
        BufferParams b1;
        b1.capacity_veh_per_hr = std::max(markov.max_capacity(k - 2), arriving + 1.0);
        b1.demand_veh_per_hr = arriving;
        sub.buffers = {b1, cfg.buffers[k - 1]};
        MarkovCapacityModel mk;
        mk.mode_count = markov.mode_count;
        mk.transition_rates_per_hr = markov.transition_rates_per_hr;
        mk.capacities.resize(markov.mode_count);
        for (int s = 0; s < markov.mode_count; ++s)
            mk.capacities[s] = {markov.capacities[s][k - 2], markov.capacities[s][k - 1]};

        GridSpec g;
        g.u = {range_for(grid.u, k - 2)};
        g.kappa = {range_for(grid.kappa, k - 2)};
        DesignResult r;
        try {
            r = design_localized(sub, mk, g, opts);
        } catch (const NoRoot&) {
            all_feasible = false;
            u_out[k - 2] = range_for(grid.u, k - 2).hi;
            k_out[k - 2] = std::max(1e-6, range_for(grid.kappa, k - 2).lo);
            continue;
        }
        if (!r.feasible) {
            // Fall back to the throughput variant's witnessing policy.
            DesignResult t = design_localized_throughput(sub, mk, g, opts);
            r = t;
            all_feasible = all_feasible && t.feasible;
        }
        u_out[k - 2] = r.policy.u_veh_per_hr[0];
        k_out[k - 2] = r.policy.kappa_kmh[0];
    }
    DesignResult res;
    res.policy = AffineControlPolicy{u_out, k_out};
    res.feasible = all_feasible;
    res.objective = 0.0;
    return res;
}

std::vector<double> alinea_step(const AlineaSpec& spec, const HighwayConfig& cfg,
                                const std::vector<double>& prev_mu,
                                const std::vector<double>& n_now) {
    const int K = cfg.num_cells();
    std::vector<double> mu(K - 1);
    for (int r = 0; r < K - 1; ++r) {
        const int cell = r + 1;
        double v = prev_mu[r] - spec.gain * (n_now[cell] - spec.n_crit[cell]);
        mu[r] = std::clamp(v, 0.0, cfg.buffers[cell].capacity_veh_per_hr);
    }
    return mu;
}

std::vector<double> metaline_step(const MetalineSpec& spec, const HighwayConfig& cfg,
                                  const std::vector<double>& prev_mu,
                                  const std::vector<double>& n_now,
                                  const std::vector<double>& n_prev) {
    const int K = cfg.num_cells();
    std::vector<double> mu(K - 1);
    for (int r = 0; r < K - 1; ++r) {
        double v = prev_mu[r];
        for (int c = 0; c < K; ++c) {
            v -= spec.KP[r][c] * (n_now[c] - n_prev[c]);
            v -= spec.KI[r][c] * (n_now[c] - spec.n_crit[c]);
        }
        mu[r] = std::clamp(v, 0.0, cfg.buffers[r + 1].capacity_veh_per_hr);
    }
    return mu;
}

std::vector<CompareRow> compare_strategies(const HighwayConfig& cfg,
                                           const MarkovCapacityModel& markov,
                                           const SimConfig& sim,
                                           const std::vector<NamedStrategy>& strategies,
                                           int replications, simd::Backend backend,
                                           int threads) {
    std::vector<CompareRow> rows;
    rows.reserve(strategies.size());
    std::vector<LaneTask> lanes(replications);
    for (int i = 0; i < replications; ++i) lanes[i].seed = sim.seed + i;

    for (const NamedStrategy& ns : strategies) {
        const std::vector<LaneResult> res =
            simulate_batch(ns.strategy, cfg, markov, sim, lanes, nullptr, backend, threads);
        CompareRow row;
        row.name = ns.name;
        const int n_hours = res.empty() ? 0 : static_cast<int>(res[0].metrics.per_hour.size());
        row.mean.per_hour.assign(n_hours, HourlyMetric{});
        row.stderr_.per_hour.assign(n_hours, HourlyMetric{});
        for (const LaneResult& r : res) row.per_seed.push_back(r.metrics);

        auto mean_se = [&](auto get) {
            double m = 0.0;
            for (const LaneResult& r : res) m += get(r.metrics);
            m /= res.size();
            double var = 0.0;
            for (const LaneResult& r : res) {
                const double d = get(r.metrics) - m;
                var += d * d;
            }
            const double se =
                res.size() > 1 ? std::sqrt(var / (res.size() * (res.size() - 1.0))) : 0.0;
            return std::pair(m, se);
        };
        std::tie(row.mean.time_avg_queue_veh, row.stderr_.time_avg_queue_veh) =
            mean_se([](const Metrics& m) { return m.time_avg_queue_veh; });
        std::tie(row.mean.vht_veh_hr, row.stderr_.vht_veh_hr) =
            mean_se([](const Metrics& m) { return m.vht_veh_hr; });
        for (int h = 0; h < n_hours; ++h) {
            std::tie(row.mean.per_hour[h].queue_mean, row.stderr_.per_hour[h].queue_mean) =
                mean_se([&](const Metrics& m) { return m.per_hour[h].queue_mean; });
            std::tie(row.mean.per_hour[h].vht, row.stderr_.per_hour[h].vht) =
                mean_se([&](const Metrics& m) { return m.per_hour[h].vht; });
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ssctm
