#include "ssctm/pwaffine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ssctm {

namespace {
constexpr double kKnotEps = 1e-12;
}

PwAffine PwAffine::affine(double lo, double hi, double a0, double b0) {
    assert(hi > lo);
    PwAffine f;
    f.knots_ = {lo, hi};
    f.a_ = {a0};
    f.b_ = {b0};
    return f;
}

PwAffine PwAffine::constant(double lo, double hi, double c) { return affine(lo, hi, c, 0.0); }

double PwAffine::eval(double x) const {
    const int i = piece_at(x);
    return a_[i] + b_[i] * x;
}

int PwAffine::piece_at(double x) const {
    if (x <= knots_.front()) return 0;
    if (x >= knots_.back()) return piece_count() - 1;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    return static_cast<int>(it - knots_.begin()) - 1;
}

void PwAffine::normalize() {
    // Drop zero-length pieces and merge pieces with identical coefficients.
    std::vector<double> ks{knots_.front()};
    std::vector<double> na, nb;
    for (int i = 0; i < piece_count(); ++i) {
        if (knots_[i + 1] - ks.back() <= kKnotEps * std::max(1.0, std::abs(ks.back())) &&
            i + 1 < piece_count())
            continue;
        if (!na.empty() && na.back() == a_[i] && nb.back() == b_[i]) {
            ks.back() = knots_[i + 1];
            continue;
        }
        na.push_back(a_[i]);
        nb.push_back(b_[i]);
        ks.push_back(knots_[i + 1]);
    }
    knots_ = std::move(ks);
    a_ = std::move(na);
    b_ = std::move(nb);
}

PwAffine PwAffine::restricted(double lo, double hi) const {
    assert(hi > lo);
    PwAffine out;
    out.knots_.push_back(lo);
    for (double k : knots_)
        if (k > lo && k < hi) out.knots_.push_back(k);
    out.knots_.push_back(hi);
    for (size_t i = 0; i + 1 < out.knots_.size(); ++i) {
        const double mid = 0.5 * (out.knots_[i] + out.knots_[i + 1]);
        const int p = piece_at(mid);
        out.a_.push_back(a_[p]);
        out.b_.push_back(b_[p]);
    }
    out.normalize();
    return out;
}

PwAffine PwAffine::combine_minmax(const PwAffine& f, const PwAffine& g, bool take_min) {
    assert(std::abs(f.lo() - g.lo()) < 1e-9 && std::abs(f.hi() - g.hi()) < 1e-9);
    const auto pick = [take_min](double a, double b) { return take_min ? a <= b : a >= b; };
    std::vector<double> ks;
    ks.reserve(f.knots().size() + g.knots().size());
    std::merge(f.knots().begin(), f.knots().end(), g.knots().begin(), g.knots().end(),
               std::back_inserter(ks));
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    // Insert crossing points so each output piece is a single affine.
    std::vector<double> full;
    for (size_t i = 0; i + 1 < ks.size(); ++i) {
        const double x0 = ks[i], x1 = ks[i + 1];
        full.push_back(x0);
        const double mid = 0.5 * (x0 + x1);
        const int pf = f.piece_at(mid), pg = g.piece_at(mid);
        const double da = f.piece_a(pf) - g.piece_a(pg);
        const double db = f.piece_b(pf) - g.piece_b(pg);
        if (db != 0.0) {
            const double xc = -da / db;
            if (xc > x0 + kKnotEps && xc < x1 - kKnotEps) full.push_back(xc);
        }
    }
    full.push_back(ks.back());

    PwAffine out;
    out.knots_ = full;
    for (size_t i = 0; i + 1 < full.size(); ++i) {
        const double mid = 0.5 * (full[i] + full[i + 1]);
        const int pf = f.piece_at(mid), pg = g.piece_at(mid);
        const bool takef = pick(f.piece_a(pf) + f.piece_b(pf) * mid,
                                g.piece_a(pg) + g.piece_b(pg) * mid);
        out.a_.push_back(takef ? f.piece_a(pf) : g.piece_a(pg));
        out.b_.push_back(takef ? f.piece_b(pf) : g.piece_b(pg));
    }
    out.normalize();
    return out;
}

PwAffine pw_min(const PwAffine& f, const PwAffine& g) {
    return PwAffine::combine_minmax(f, g, true);
}

PwAffine pw_max(const PwAffine& f, const PwAffine& g) {
    return PwAffine::combine_minmax(f, g, false);
}

PwAffine pw_add(const PwAffine& f, const PwAffine& g) {
    assert(std::abs(f.lo() - g.lo()) < 1e-9 && std::abs(f.hi() - g.hi()) < 1e-9);
    std::vector<double> ks;
    std::merge(f.knots().begin(), f.knots().end(), g.knots().begin(), g.knots().end(),
               std::back_inserter(ks));
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    PwAffine out;
    out.knots_ = ks;
    for (size_t i = 0; i + 1 < ks.size(); ++i) {
        const double mid = 0.5 * (ks[i] + ks[i + 1]);
        const int pf = f.piece_at(mid), pg = g.piece_at(mid);
        out.a_.push_back(f.piece_a(pf) + g.piece_a(pg));
        out.b_.push_back(f.piece_b(pf) + g.piece_b(pg));
    }
    out.normalize();
    return out;
}

PwAffine pw_scale(const PwAffine& f, double c) {
    PwAffine out = f;
    for (auto& v : out.a_) v *= c;
    for (auto& v : out.b_) v *= c;
    return out;
}

PwAffine pw_shift(const PwAffine& f, double c) {
    PwAffine out = f;
    for (auto& v : out.a_) v += c;
    return out;
}

std::pair<double, double> PwAffine::min_value_arg() const {
    double best = eval(knots_[0]);
    double arg = knots_[0];
    for (size_t i = 1; i < knots_.size(); ++i) {
        const double v = eval(knots_[i]);
        if (v < best) {
            best = v;
            arg = knots_[i];
        }
    }
    return {best, arg};
}

std::pair<double, double> PwAffine::max_value_arg() const {
    double best = eval(knots_[0]);
    double arg = knots_[0];
    for (size_t i = 1; i < knots_.size(); ++i) {
        const double v = eval(knots_[i]);
        if (v > best) {
            best = v;
            arg = knots_[i];
        }
    }
    return {best, arg};
}

std::optional<double> PwAffine::first_root() const {
    for (int i = 0; i < piece_count(); ++i) {
        const double x0 = knots_[i], x1 = knots_[i + 1];
        const double v0 = a_[i] + b_[i] * x0;
        const double v1 = a_[i] + b_[i] * x1;
        if (v0 == 0.0) return x0;
        if ((v0 < 0) != (v1 < 0) || v1 == 0.0) {
            if (b_[i] == 0.0) return x0;
            double r = -a_[i] / b_[i];
            r = std::clamp(r, x0, x1);
            return r;
        }
    }
    return std::nullopt;
}

}  // namespace ssctm
