#include "ssctm/detail/inner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssctm/detail/boxmax.hpp"
#include "ssctm/errors.hpp"

namespace ssctm::detail {

namespace {

// Affine expression tied to one free axis (axis < 0 means constant p).
struct Aff {
    int axis = -1;
    double p = 0.0;  // value = p + q * x_axis
    double q = 0.0;

    static Aff constant(double c) { return Aff{-1, c, 0.0}; }
};

void add_product(QuadForm& Q, double coef, const Aff& u, const Aff& w) {
    if (coef == 0.0) return;
    // (u.p + u.q x_a)(w.p + w.q x_b)
    Q.add_const(coef * u.p * w.p);
    if (u.axis >= 0 && u.q != 0.0) Q.add_linear(u.axis, coef * u.q * w.p);
    if (w.axis >= 0 && w.q != 0.0) Q.add_linear(w.axis, coef * w.q * u.p);
    if (u.axis >= 0 && w.axis >= 0 && u.q != 0.0 && w.q != 0.0)
        Q.add_quadratic(u.axis, w.axis, coef * u.q * w.q);
}

void append_crossings(const PwAffine& f, double c, std::vector<double>& out) {
    for (int i = 0; i < f.piece_count(); ++i) {
        if (f.piece_b(i) == 0.0) continue;
        const double x = (c - f.piece_a(i)) / f.piece_b(i);
        if (x > f.knots()[i] && x < f.knots()[i + 1]) out.push_back(x);
    }
}

double rho_eval(const WeightFn& w, double x) { return w.eval(x); }

}  // namespace

InnerProblem make_problem(DesignVariant scheme, int buffer_k, int mode,
                          const HighwayConfig& cfg, const MarkovCapacityModel& markov,
                          const MeterView& mv, const WeightScheme& weights) {
    InnerProblem p;
    p.cfg = &cfg;
    p.markov = &markov;
    p.mv = &mv;
    p.weights = &weights;
    p.buffer_k = buffer_k;
    p.mode = mode;
    const int K = cfg.num_cells();
    std::vector<double> betas(K);
    for (int k = 0; k < K; ++k) betas[k] = cfg.cells[k].mainline_ratio;
    p.gt.resize(K);
    p.alpha_const = 0.0;
    for (int j = 1; j <= K; ++j) {
        p.gt[j - 1] = gamma_tilde(j, buffer_k, betas);
        p.alpha_const += p.gt[j - 1] * cfg.buffers[j - 1].demand_veh_per_hr;
    }
    (void)scheme;
    return p;
}

double expansion_eval(const InnerProblem& p, const std::vector<int>& queue,
                      const std::vector<double>& n) {
    const HighwayConfig& cfg = *p.cfg;
    const int K = cfg.num_cells();
    const WeightScheme& W = *p.weights;
    double out = p.alpha_const;
    for (int j = 1; j <= K; ++j) {
        const double rho_j = rho_eval(W.rho[j - 1], n[j - 1]);
        const double beta_j = cfg.cells[j - 1].mainline_ratio;
        double phi = p.gt[j - 1] * rho_j;
        if (j < K) phi -= beta_j * p.gt[j] * rho_eval(W.rho[j], n[j]);
        double f;
        const double send = cfg.cells[j - 1].free_flow_speed_kmh * n[j - 1];
        const double cap = p.markov->capacity(j - 1, p.mode - 1);
        if (j == K) {
            f = std::min(send, cap);
        } else {
            const CellParams& cn = cfg.cells[j];
            const double rn = onramp_flow(cfg, *p.mv, j + 1, queue[j], n[j]);
            const double recv =
                std::max(0.0, cn.congestion_wave_speed_kmh * (cn.jam_density_veh_per_km - n[j]) - rn) /
                beta_j;
            f = std::min({send, cap, recv});
        }
        out -= phi * f;

        const double psi = p.gt[j - 1] * (1.0 - rho_j);
        if (psi != 0.0) {
            const double r = j == 1 ? mainline_inflow(queue[0], n[0], cfg)
                                    : onramp_flow(cfg, *p.mv, j, queue[j - 1], n[j - 1]);
            out -= psi * r;
        }
    }
    return out;
}

std::vector<SplitBox> split_step_weights(const StateBox& box, const WeightScheme& w) {
    // After splitting, every free axis carries a One, Affine, or
    // out-of-range Step weight, all constant or affine on the box.
    std::vector<SplitBox> work{{box, w}};
    const int K = static_cast<int>(box.dens.size());
    const WeightFn kOne{WeightFn::One, 0, 1, false};
    for (int j = 0; j < K; ++j) {
        if (w.rho[j].kind != WeightFn::Step) continue;
        std::vector<SplitBox> next;
        for (SplitBox& sb : work) {
            const Interval iv = sb.box.dens[j];
            const double at = w.rho[j].a;
            if (iv.pinned() || at <= iv.lo || at > iv.hi) {
                // Pointwise evaluation is constant on the interval.
                next.push_back(std::move(sb));
                continue;
            }
            SplitBox low = sb;
            low.box.dens[j] = Interval{iv.lo, at};
            low.weights.rho[j] = WeightFn{WeightFn::Step, iv.hi + 1.0, 1, false};  // == 0
            next.push_back(std::move(low));
            SplitBox high = sb;
            high.box.dens[j] = Interval{at, iv.hi};
            high.weights.rho[j] = kOne;
            next.push_back(std::move(high));
        }
        work = std::move(next);
    }
    return work;
}

namespace {

struct AxisInfo {
    int cell = 0;  // 1-based
    double lo = 0, hi = 0;
    std::vector<double> knots;
};

struct BoxMachinery {
    std::vector<int> axis_of_cell;  // per cell: free-axis slot or -1
    std::vector<AxisInfo> axes;
    // Per cell (1-based j): effS_j = min(v_j x_j, F_js) when axis j free.
    std::vector<PwAffine> effS;
    std::vector<bool> effS_free;
    std::vector<double> effS_pin;
    // effB_j lives on axis j+1: min(receiving_j(x_{j+1}), F_js), j < K.
    std::vector<PwAffine> effB;
    std::vector<bool> effB_free;
    std::vector<double> effB_pin;
    // r_j as function of its own axis (queue branch per box indicator).
    std::vector<PwAffine> rfn;
    std::vector<bool> r_free;
    std::vector<double> r_pin;
};

BoxMachinery build_machinery(const InnerProblem& p, const StateBox& box,
                             const WeightScheme& W) {
    const HighwayConfig& cfg = *p.cfg;
    const int K = cfg.num_cells();
    BoxMachinery m;
    m.axis_of_cell.assign(K, -1);
    for (int j = 0; j < K; ++j) {
        if (!box.dens[j].pinned()) {
            m.axis_of_cell[j] = static_cast<int>(m.axes.size());
            m.axes.push_back(AxisInfo{j + 1, box.dens[j].lo, box.dens[j].hi, {}});
        }
    }

    m.effS.reserve(K);
    m.effS_free.assign(K, false);
    m.effS_pin.assign(K, 0.0);
    m.effB.reserve(K);
    m.effB_free.assign(K, false);
    m.effB_pin.assign(K, 0.0);
    m.rfn.reserve(K);
    m.r_free.assign(K, false);
    m.r_pin.assign(K, 0.0);

    for (int j = 1; j <= K; ++j) {
        const double cap = p.markov->capacity(j - 1, p.mode - 1);
        const double v = cfg.cells[j - 1].free_flow_speed_kmh;
        const int ax = m.axis_of_cell[j - 1];
        if (ax >= 0) {
            const AxisInfo& a = m.axes[ax];
            m.effS.push_back(pw_min(PwAffine::affine(a.lo, a.hi, 0.0, v),
                                    PwAffine::constant(a.lo, a.hi, cap)));
            m.effS_free[j - 1] = true;
        } else {
            m.effS.push_back(PwAffine::constant(0, 1, 0));
            m.effS_pin[j - 1] = std::min(v * box.dens[j - 1].lo, cap);
        }

        // r_j on its own axis.
        if (ax >= 0) {
            const AxisInfo& a = m.axes[ax];
            m.rfn.push_back(j == 1 ? mainline_inflow_fn(cfg, box.queue[0] > 0, a.lo, a.hi)
                                   : onramp_flow_fn(cfg, *p.mv, j, box.queue[j - 1] > 0,
                                                    a.lo, a.hi));
            m.r_free[j - 1] = true;
        } else {
            m.rfn.push_back(PwAffine::constant(0, 1, 0));
            m.r_pin[j - 1] =
                j == 1 ? mainline_inflow(box.queue[0], box.dens[0].lo, cfg)
                       : onramp_flow(cfg, *p.mv, j, box.queue[j - 1], box.dens[j - 1].lo);
        }

        // effB_j on axis j+1.
        if (j < K) {
            const int axn = m.axis_of_cell[j];
            if (axn >= 0) {
                const AxisInfo& an = m.axes[axn];
                PwAffine recv =
                    receiving_fn(cfg, *p.mv, j, box.queue[j] > 0, an.lo, an.hi);
                m.effB.push_back(pw_min(recv, PwAffine::constant(an.lo, an.hi, cap)));
                m.effB_free[j - 1] = true;
            } else {
                const CellParams& cn = cfg.cells[j];
                const double pin = box.dens[j].lo;
                const double rn = onramp_flow(cfg, *p.mv, j + 1, box.queue[j], pin);
                const double recv =
                    std::max(0.0, cn.congestion_wave_speed_kmh * (cn.jam_density_veh_per_km - pin) - rn) /
                    cfg.cells[j - 1].mainline_ratio;
                m.effB.push_back(PwAffine::constant(0, 1, 0));
                m.effB_pin[j - 1] = std::min(recv, cap);
            }
        } else {
            m.effB.push_back(PwAffine::constant(0, 1, 0));
        }
    }

    // Knot collection per axis.
    for (AxisInfo& a : m.axes) {
        std::vector<double>& ks = a.knots;
        ks.push_back(a.lo);
        ks.push_back(a.hi);
        const int j = a.cell;  // 1-based cell on this axis
        const WeightFn& w = W.rho[j - 1];
        if (w.kind == WeightFn::Affine && w.clamp01) {
            if (w.a > a.lo && w.a < a.hi) ks.push_back(w.a);
            if (w.b > a.lo && w.b < a.hi) ks.push_back(w.b);
        }
        auto add_pw = [&](const PwAffine& f) {
            for (double k : f.knots())
                if (k > a.lo && k < a.hi) ks.push_back(k);
        };
        if (m.r_free[j - 1]) add_pw(m.rfn[j - 1]);
        if (m.effS_free[j - 1]) add_pw(m.effS[j - 1]);
        // f_{j-1}'s receiving side lives on this axis; add its structure and
        // its crossings with a pinned sending side.
        if (j >= 2 && m.effB_free[j - 2]) {
            add_pw(m.effB[j - 2]);
            if (!m.effS_free[j - 2])
                append_crossings(m.effB[j - 2], m.effS_pin[j - 2], ks);
        }
        // f_j's sending side against a pinned receiving side.
        if (j < p.cfg->num_cells() && m.effS_free[j - 1] && !m.effB_free[j - 1])
            append_crossings(m.effS[j - 1], m.effB_pin[j - 1], ks);
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end(),
                             [](double x, double y) { return std::abs(x - y) < 1e-10; }),
                 ks.end());
    }
    return m;
}

struct PieceCtx {
    // Resolved affine data on one sub-box.
    std::vector<Aff> rho;   // per cell
    std::vector<Aff> r;     // per cell
    std::vector<Aff> fS;    // sending side of f_j (min with cap applied)
    std::vector<Aff> fB;    // receiving side (axis j+1), valid j < K
};

Aff piece_of(const PwAffine& f, double mid, int axis) {
    const int pi = f.piece_at(mid);
    return Aff{axis, f.piece_a(pi), f.piece_b(pi)};
}

Aff rho_piece(const WeightFn& w, bool free_axis, int axis, double mid_or_pin) {
    if (w.kind == WeightFn::One) return Aff::constant(1.0);
    if (!free_axis || w.kind == WeightFn::Step)
        return Aff::constant(w.eval(mid_or_pin));
    // Affine (x - a) / (b - a), optionally clamped; mid decides the piece.
    const double denom = w.b - w.a;
    if (w.clamp01) {
        const double val = (mid_or_pin - w.a) / denom;
        if (val <= 0.0) return Aff::constant(0.0);
        if (val >= 1.0) return Aff::constant(1.0);
    }
    return Aff{axis, -w.a / denom, 1.0 / denom};
}

}  // namespace

InnerMax exact_box_max(const InnerProblem& p, const StateBox& box0) {
    const HighwayConfig& cfg = *p.cfg;
    const int K = cfg.num_cells();

    InnerMax best;
    best.value = -std::numeric_limits<double>::infinity();

    for (const SplitBox& sb : split_step_weights(box0, *p.weights)) {
        const StateBox& box = sb.box;
        const WeightScheme& W = sb.weights;
        BoxMachinery m = build_machinery(p, box, W);
        const int d = static_cast<int>(m.axes.size());
        if (d > 3) throw Unsupported("exact inner solver limited to 3 free axes");

        if (d == 0) {
            std::vector<double> n(K);
            for (int j = 0; j < K; ++j) n[j] = box.dens[j].lo;
            std::vector<int> qi(box.queue.begin(), box.queue.end());
            const double val = expansion_eval(p, qi, n);
            if (val > best.value) {
                best.value = val;
                best.argmax.mode = p.mode;
                best.argmax.queues_veh.assign(box.queue.begin(), box.queue.end());
                best.argmax.densities_veh_per_km = n;
            }
            continue;
        }

        // Sub-box enumeration over per-axis knot intervals.
        std::vector<int> idx(d, 0);
        std::vector<int> counts(d);
        for (int a = 0; a < d; ++a)
            counts[a] = static_cast<int>(m.axes[a].knots.size()) - 1;

        auto run_subbox = [&](const std::vector<int>& iv) {
            std::array<double, 3> lo{}, hi{}, mid{};
            for (int a = 0; a < d; ++a) {
                lo[a] = m.axes[a].knots[iv[a]];
                hi[a] = m.axes[a].knots[iv[a] + 1];
                mid[a] = 0.5 * (lo[a] + hi[a]);
            }

            PieceCtx pc;
            pc.rho.resize(K);
            pc.r.resize(K);
            pc.fS.resize(K);
            pc.fB.resize(K);
            for (int j = 1; j <= K; ++j) {
                const int ax = m.axis_of_cell[j - 1];
                const double at = ax >= 0 ? mid[ax] : box.dens[j - 1].lo;
                pc.rho[j - 1] = rho_piece(W.rho[j - 1], ax >= 0, ax, at);
                pc.r[j - 1] = m.r_free[j - 1] ? piece_of(m.rfn[j - 1], at, ax)
                                              : Aff::constant(m.r_pin[j - 1]);
                pc.fS[j - 1] = m.effS_free[j - 1] ? piece_of(m.effS[j - 1], at, ax)
                                                  : Aff::constant(m.effS_pin[j - 1]);
                if (j < K) {
                    const int axn = m.axis_of_cell[j];
                    const double atn = axn >= 0 ? mid[axn] : box.dens[j].lo;
                    pc.fB[j - 1] = m.effB_free[j - 1] ? piece_of(m.effB[j - 1], atn, axn)
                                                      : Aff::constant(m.effB_pin[j - 1]);
                }
            }

            // Resolve each interior f_j: sending side vs receiving side.
            // side_choice: 0 = resolved sending, 1 = resolved receiving,
            // 2 = ambiguous (branch).
            std::vector<int> side(K, 0);
            std::vector<int> ambiguous;
            for (int j = 1; j <= K; ++j) {
                if (j == K) {
                    side[j - 1] = 0;
                    continue;
                }
                const Aff& S = pc.fS[j - 1];
                const Aff& B = pc.fB[j - 1];
                auto range = [&](const Aff& a) {
                    if (a.axis < 0) return std::pair<double, double>{a.p, a.p};
                    const double v0 = a.p + a.q * lo[a.axis];
                    const double v1 = a.p + a.q * hi[a.axis];
                    return std::pair<double, double>{std::min(v0, v1), std::max(v0, v1)};
                };
                const auto [smin, smax] = range(S);
                const auto [bmin, bmax] = range(B);
                if (smax <= bmin + 1e-9) {
                    side[j - 1] = 0;
                } else if (bmax <= smin + 1e-9) {
                    side[j - 1] = 1;
                } else {
                    side[j - 1] = 2;
                    ambiguous.push_back(j);
                }
            }

            const int nb = static_cast<int>(ambiguous.size());
            for (int mask = 0; mask < (1 << nb); ++mask) {
                std::vector<int> choice = side;
                std::vector<LinCon> cons;
                bool feasible_combo = true;
                for (int t = 0; t < nb; ++t) {
                    const int j = ambiguous[t];
                    const int pick = (mask >> t) & 1;
                    choice[j - 1] = pick;
                    const Aff& S = pc.fS[j - 1];
                    const Aff& B = pc.fB[j - 1];
                    // chosen <= other, as a.x <= b
                    const Aff& ch = pick == 0 ? S : B;
                    const Aff& ot = pick == 0 ? B : S;
                    LinCon lc;
                    if (ch.axis >= 0) lc.a[ch.axis] += ch.q;
                    if (ot.axis >= 0) lc.a[ot.axis] -= ot.q;
                    lc.b = ot.p - ch.p;
                    if (ch.axis < 0 && ot.axis < 0 && ch.p > ot.p + 1e-9)
                        feasible_combo = false;
                    cons.push_back(lc);
                }
                if (!feasible_combo) continue;

                QuadForm Q;
                Q.dim = d;
                Q.add_const(p.alpha_const);
                for (int j = 1; j <= K; ++j) {
                    const double gtj = p.gt[j - 1];
                    const double beta_j = cfg.cells[j - 1].mainline_ratio;
                    const Aff& f = choice[j - 1] == 0 ? pc.fS[j - 1] : pc.fB[j - 1];
                    // -(gt_j rho_j - beta_j gt_{j+1} rho_{j+1}) f_j
                    add_product(Q, -gtj, pc.rho[j - 1], f);
                    if (j < K) add_product(Q, beta_j * p.gt[j], pc.rho[j], f);
                    // -gt_j (1 - rho_j) r_j
                    add_product(Q, -gtj, Aff::constant(1.0), pc.r[j - 1]);
                    add_product(Q, gtj, pc.rho[j - 1], pc.r[j - 1]);
                }

                const BoxMaxResult res = max_quadratic(Q, lo, hi, cons);
                if (res.value > best.value) {
                    best.value = res.value;
                    best.argmax.mode = p.mode;
                    best.argmax.queues_veh.assign(box.queue.begin(), box.queue.end());
                    best.argmax.densities_veh_per_km.resize(K);
                    for (int j = 0; j < K; ++j) {
                        const int ax = m.axis_of_cell[j];
                        best.argmax.densities_veh_per_km[j] =
                            ax >= 0 ? res.x[ax] : box.dens[j].lo;
                    }
                }
            }
        };

        std::vector<int> iv(d, 0);
        while (true) {
            run_subbox(iv);
            int a = 0;
            while (a < d && ++iv[a] == counts[a]) iv[a++] = 0;
            if (a == d) break;
        }
    }
    return best;
}

SetFamily set_family(DesignVariant scheme, const DensityBounds& b, int buffer_k, int K,
                     const std::vector<char>& zero_demand) {
    SetFamily fam;
    fam.buffer = buffer_k;
    fam.ind.assign(K, -1);
    fam.dens0.resize(K);
    fam.dens1.resize(K);
    for (int j = 0; j < K; ++j) {
        fam.dens0[j] = Interval{b.lower_no_queue[j], b.upper_blocked[j]};
        fam.dens1[j] = Interval{b.lower_with_queue[j], b.upper_blocked[j]};
    }
    fam.first_cell = 1;
    // Buffers that never receive demand never hold queues.
    for (int j = 0; j < K; ++j)
        if (!zero_demand.empty() && zero_demand[j] && j + 1 != buffer_k) fam.ind[j] = 0;

    switch (scheme) {
        case DesignVariant::Localized: {
            // Buffer 1: n_1 pinned at the queue-present lower bound; buffer 2:
            // n_1 pinned at the no-queue lower bound. Upper ends at the free
            // upper bound of cell 2 (equal to the blocked one for a last cell).
            if (buffer_k == 1) {
                fam.ind[0] = 1;
                fam.dens1[0] = Interval{b.lower_with_queue[0], b.lower_with_queue[0]};
            } else {
                fam.ind[0] = 0;
                fam.ind[1] = 1;
                fam.dens0[0] = Interval{b.lower_no_queue[0], b.lower_no_queue[0]};
            }
            break;
        }
        case DesignVariant::FullyCoordinated: {
            fam.ind[buffer_k - 1] = 1;
            break;
        }
        case DesignVariant::PartiallyCoordinated: {
            fam.ind[buffer_k - 1] = 1;
            for (int j = 0; j < buffer_k - 1; ++j) {
                fam.ind[j] = 0;
                fam.dens0[j] = Interval{b.lower_no_queue[j], b.lower_no_queue[j]};
            }
            fam.first_cell = std::max(1, buffer_k - 1);
            break;
        }
    }
    return fam;
}

std::vector<StateBox> enumerate_family(const SetFamily& fam) {
    const int K = static_cast<int>(fam.ind.size());
    std::vector<int> free_idx;
    for (int j = 0; j < K; ++j)
        if (fam.ind[j] < 0) free_idx.push_back(j);
    std::vector<StateBox> out;
    const int combos = 1 << free_idx.size();
    out.reserve(combos);
    for (int mask = 0; mask < combos; ++mask) {
        StateBox box;
        box.queue.assign(K, 0);
        box.dens.resize(K);
        for (int j = 0; j < K; ++j)
            if (fam.ind[j] >= 0) box.queue[j] = fam.ind[j];
        for (size_t t = 0; t < free_idx.size(); ++t)
            box.queue[free_idx[t]] = (mask >> t) & 1;
        for (int j = 0; j < K; ++j)
            box.dens[j] = box.queue[j] ? fam.dens1[j] : fam.dens0[j];
        out.push_back(std::move(box));
    }
    return out;
}

InnerMax family_dp_max(const InnerProblem& p, const SetFamily& fam, int grid_fill) {
    const HighwayConfig& cfg = *p.cfg;
    const int K = cfg.num_cells();
    const WeightScheme& W = *p.weights;
    const int j0 = fam.first_cell;  // 1-based

    // Per cell and indicator value: grid of candidate densities.
    struct AxisGrid {
        std::vector<double> x[2];
        bool allow[2] = {false, false};
    };
    std::vector<AxisGrid> grids(K);
    for (int j = j0; j <= K; ++j) {
        AxisGrid& g = grids[j - 1];
        for (int i = 0; i < 2; ++i) {
            if (fam.ind[j - 1] >= 0 && fam.ind[j - 1] != i) continue;
            g.allow[i] = true;
            const Interval iv = i ? fam.dens1[j - 1] : fam.dens0[j - 1];
            std::vector<double>& xs = g.x[i];
            if (iv.pinned()) {
                xs.push_back(iv.lo);
                continue;
            }
            std::vector<double> knots{iv.lo, iv.hi};
            auto add_pw = [&](const PwAffine& f) {
                for (double k : f.knots())
                    if (k > iv.lo && k < iv.hi) knots.push_back(k);
            };
            add_pw(j == 1 ? mainline_inflow_fn(cfg, i > 0, iv.lo, iv.hi)
                          : onramp_flow_fn(cfg, *p.mv, j, i > 0, iv.lo, iv.hi));
            const WeightFn& w = W.rho[j - 1];
            if (w.kind == WeightFn::Affine && w.clamp01) {
                if (w.a > iv.lo && w.a < iv.hi) knots.push_back(w.a);
                if (w.b > iv.lo && w.b < iv.hi) knots.push_back(w.b);
            }
            if (w.kind == WeightFn::Step && w.a > iv.lo && w.a < iv.hi) {
                knots.push_back(w.a);
                knots.push_back(std::nextafter(w.a, iv.lo));
            }
            std::sort(knots.begin(), knots.end());
            knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
            const double span = iv.hi - iv.lo;
            for (size_t t = 0; t + 1 < knots.size(); ++t) {
                xs.push_back(knots[t]);
                const int fill =
                    std::max(1, static_cast<int>(grid_fill * (knots[t + 1] - knots[t]) / span));
                for (int u = 1; u < fill; ++u)
                    xs.push_back(knots[t] + (knots[t + 1] - knots[t]) * u / fill);
            }
            xs.push_back(knots.back());
        }
    }

    // term assignments: node_j(x_j, i_j) = -Psi_j r_j; edge_j = -Phi_j f_j
    // (stage j couples x_j and x_{j+1}); the last cell's f is a node term.
    auto rho_at = [&](int j, double x) { return W.rho[j - 1].eval(x); };
    auto node_term = [&](int j, double x, int ind) {
        const double psi = p.gt[j - 1] * (1.0 - rho_at(j, x));
        double out = 0.0;
        if (psi != 0.0) {
            const double r = j == 1 ? mainline_inflow(ind, x, cfg)
                                    : onramp_flow(cfg, *p.mv, j, ind, x);
            out -= psi * r;
        }
        if (j == K) {
            const double f = std::min(cfg.cells[j - 1].free_flow_speed_kmh * x,
                                      p.markov->capacity(j - 1, p.mode - 1));
            out -= p.gt[j - 1] * rho_at(j, x) * f;
        }
        return out;
    };
    auto edge_term = [&](int j, double xj, double xn, int ind_next) {
        // f_j for j < K with queue indicator of buffer j+1.
        const CellParams& cn = cfg.cells[j];
        const double beta_j = cfg.cells[j - 1].mainline_ratio;
        const double rn = onramp_flow(cfg, *p.mv, j + 1, ind_next, xn);
        const double recv =
            std::max(0.0, cn.congestion_wave_speed_kmh * (cn.jam_density_veh_per_km - xn) - rn) /
            beta_j;
        const double f = std::min({cfg.cells[j - 1].free_flow_speed_kmh * xj,
                                   p.markov->capacity(j - 1, p.mode - 1), recv});
        const double phi = p.gt[j - 1] * rho_at(j, xj) - beta_j * p.gt[j] * rho_at(j + 1, xn);
        return -phi * f;
    };

    struct Cell {
        double value;
        int prev_i;
        int prev_x;
    };
    // V[i][x] over current axis.
    std::vector<std::vector<Cell>> V(2);
    std::vector<std::vector<std::vector<Cell>>> trace(K + 1);

    for (int i = 0; i < 2; ++i) {
        if (!grids[j0 - 1].allow[i]) {
            V[i].clear();
            continue;
        }
        V[i].resize(grids[j0 - 1].x[i].size());
        for (size_t t = 0; t < V[i].size(); ++t)
            V[i][t] = Cell{node_term(j0, grids[j0 - 1].x[i][t], i), -1, -1};
    }
    trace[j0] = V;

    for (int j = j0; j < K; ++j) {
        std::vector<std::vector<Cell>> Vn(2);
        for (int in = 0; in < 2; ++in) {
            if (!grids[j].allow[in]) continue;
            const std::vector<double>& xs = grids[j].x[in];
            Vn[in].assign(xs.size(), Cell{-std::numeric_limits<double>::infinity(), -1, -1});
            for (size_t tn = 0; tn < xs.size(); ++tn) {
                const double xn = xs[tn];
                double bestv = -std::numeric_limits<double>::infinity();
                int bi = -1, bx = -1;
                for (int ip = 0; ip < 2; ++ip) {
                    if (!grids[j - 1].allow[ip]) continue;
                    const std::vector<double>& xp = grids[j - 1].x[ip];
                    for (size_t tp = 0; tp < xp.size(); ++tp) {
                        const double cand =
                            V[ip][tp].value + edge_term(j, xp[tp], xn, in);
                        if (cand > bestv) {
                            bestv = cand;
                            bi = ip;
                            bx = static_cast<int>(tp);
                        }
                    }
                }
                Vn[in][tn] = Cell{bestv + node_term(j + 1, xn, in), bi, bx};
            }
        }
        V = std::move(Vn);
        trace[j + 1] = V;
    }

    // Extract best terminal state and walk back.
    double bestv = -std::numeric_limits<double>::infinity();
    int bi = -1, bx = -1;
    for (int i = 0; i < 2; ++i)
        for (size_t t = 0; t < V[i].size(); ++t)
            if (V[i][t].value > bestv) {
                bestv = V[i][t].value;
                bi = i;
                bx = static_cast<int>(t);
            }

    InnerMax out;
    out.value = p.alpha_const + bestv;
    out.argmax.mode = p.mode;
    out.argmax.queues_veh.assign(K, 0.0);
    out.argmax.densities_veh_per_km.assign(K, 0.0);
    for (int j = 0; j < j0 - 1; ++j) {
        out.argmax.queues_veh[j] = fam.ind[j] > 0 ? 1.0 : 0.0;
        out.argmax.densities_veh_per_km[j] =
            fam.ind[j] > 0 ? fam.dens1[j].lo : fam.dens0[j].lo;
    }
    int ci = bi, cx = bx;
    for (int j = K; j >= j0; --j) {
        out.argmax.queues_veh[j - 1] = ci;
        out.argmax.densities_veh_per_km[j - 1] = grids[j - 1].x[ci][cx];
        const Cell& cell = trace[j][ci][cx];
        ci = cell.prev_i;
        cx = cell.prev_x;
    }

    // Polish: exact single-axis ascent holding the DP indicator pattern.
    std::vector<int> qi(K);
    for (int j = 0; j < K; ++j) qi[j] = out.argmax.queues_veh[j] > 0 ? 1 : 0;
    for (int sweep = 0; sweep < 4; ++sweep) {
        double improved = 0.0;
        for (int j = j0; j <= K; ++j) {
            const Interval iv = qi[j - 1] ? fam.dens1[j - 1] : fam.dens0[j - 1];
            if (iv.pinned()) continue;
            StateBox bx1;
            bx1.queue = qi;
            bx1.dens.resize(K);
            for (int t = 0; t < K; ++t)
                bx1.dens[t] = Interval{out.argmax.densities_veh_per_km[t],
                                       out.argmax.densities_veh_per_km[t]};
            bx1.dens[j - 1] = iv;
            const InnerMax one = exact_box_max(p, bx1);
            if (one.value > out.value + 1e-12) {
                improved += one.value - out.value;
                out.value = one.value;
                out.argmax = one.argmax;
            }
        }
        if (improved < 1e-10) break;
    }
    return out;
}

}  // namespace ssctm::detail
