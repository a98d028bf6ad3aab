#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace ssctm {

/// Continuous piecewise-affine function on a closed interval. Piece i lives
/// on [knots[i], knots[i+1]] and evaluates to a[i] + b[i]*x. Exact min/max
/// and roots come from knot enumeration, no iterative solves.
class PwAffine {
  public:
    static PwAffine affine(double lo, double hi, double a0, double b0);
    static PwAffine constant(double lo, double hi, double c);

    double lo() const { return knots_.front(); }
    double hi() const { return knots_.back(); }
    double eval(double x) const;

    /// Piece index whose interval contains x (ties resolve to the left piece).
    int piece_at(double x) const;
    int piece_count() const { return static_cast<int>(a_.size()); }
    double piece_a(int i) const { return a_[i]; }
    double piece_b(int i) const { return b_[i]; }
    const std::vector<double>& knots() const { return knots_; }

    PwAffine restricted(double lo, double hi) const;

    friend PwAffine pw_min(const PwAffine& f, const PwAffine& g);
    friend PwAffine pw_max(const PwAffine& f, const PwAffine& g);
    friend PwAffine pw_add(const PwAffine& f, const PwAffine& g);
    friend PwAffine pw_scale(const PwAffine& f, double c);
    friend PwAffine pw_shift(const PwAffine& f, double c);

    /// Extremes over the whole interval; attained at knots.
    std::pair<double, double> min_value_arg() const;
    std::pair<double, double> max_value_arg() const;

    /// Leftmost exact root of f(x) = 0, if any.
    std::optional<double> first_root() const;

  private:
    std::vector<double> knots_;
    std::vector<double> a_;
    std::vector<double> b_;
    void normalize();
    static PwAffine combine_minmax(const PwAffine& f, const PwAffine& g, bool take_min);
};

}  // namespace ssctm
