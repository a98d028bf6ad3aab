#pragma once

#include <array>
#include <optional>
#include <vector>

namespace ssctm::detail {

/// Quadratic x^T M x + v^T x + c over up to three variables, M symmetric.
struct QuadForm {
    int dim = 0;
    std::array<std::array<double, 3>, 3> M{};
    std::array<double, 3> v{};
    double c = 0.0;

    double eval(const std::array<double, 3>& x) const;
    void add_const(double k) { c += k; }
    void add_linear(int i, double coef) { v[i] += coef; }
    void add_quadratic(int i, int j, double coef);  // coef * x_i * x_j
};

struct LinCon {
    std::array<double, 3> a{};
    double b = 0.0;  // a . x <= b
};

struct BoxMaxResult {
    double value = 0.0;
    std::array<double, 3> x{};
};

/// Exact global maximum of a quadratic over a box intersected with at most a
/// few halfspaces. Enumerates all active sets (box facets and constraint
/// hyperplanes), solves the restricted stationary system on each face, and
/// keeps the best feasible candidate. Complete for a compact polytope.
BoxMaxResult max_quadratic(const QuadForm& q, const std::array<double, 3>& lo,
                           const std::array<double, 3>& hi,
                           const std::vector<LinCon>& cons);

}  // namespace ssctm::detail
