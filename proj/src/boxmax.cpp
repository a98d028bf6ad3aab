#include "ssctm/detail/boxmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssctm::detail {

double QuadForm::eval(const std::array<double, 3>& x) const {
    double out = c;
    for (int i = 0; i < dim; ++i) {
        out += v[i] * x[i];
        for (int j = 0; j < dim; ++j) out += M[i][j] * x[i] * x[j];
    }
    return out;
}

void QuadForm::add_quadratic(int i, int j, double coef) {
    if (i == j) {
        M[i][i] += coef;
    } else {
        M[i][j] += 0.5 * coef;
        M[j][i] += 0.5 * coef;
    }
}

namespace {

// Solve A x = b for square n<=3 with partial pivoting; false if singular.
bool solve_small(int n, double A[3][3], double b[3], double out[3], double tol) {
    int perm[3] = {0, 1, 2};
    double maxabs = tol;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) maxabs = std::max(maxabs, std::abs(A[i][j]));
    const double eps = 1e-11 * maxabs;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[perm[r]][col]) > std::abs(A[perm[piv]][col])) piv = r;
        std::swap(perm[col], perm[piv]);
        const double d = A[perm[col]][col];
        if (std::abs(d) <= eps) return false;
        for (int r = col + 1; r < n; ++r) {
            const double f = A[perm[r]][col] / d;
            for (int cc = col; cc < n; ++cc) A[perm[r]][cc] -= f * A[perm[col]][cc];
            b[perm[r]] -= f * b[perm[col]];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        double s = b[perm[col]];
        for (int cc = col + 1; cc < n; ++cc) s -= A[perm[col]][cc] * out[cc];
        out[col] = s / A[perm[col]][col];
    }
    return true;
}

struct Face {
    // Equality rows: rows x coeffs = rhs.
    int rows = 0;
    double E[3][3] = {};
    double rhs[3] = {};
};

// Particular solution + nullspace basis of E x = rhs. Returns false when the
// system is inconsistent or rank-deficient in a way that duplicates another
// face (such faces are skipped; the enumeration still covers the polytope).
bool affine_subspace(const Face& f, int dim, std::array<double, 3>& x0,
                     double N[3][3], int& null_dim) {
    double A[3][4];
    for (int i = 0; i < f.rows; ++i) {
        for (int j = 0; j < dim; ++j) A[i][j] = f.E[i][j];
        A[i][3] = f.rhs[i];
    }
    double scale = 1e-30;
    for (int i = 0; i < f.rows; ++i)
        for (int j = 0; j < dim; ++j) scale = std::max(scale, std::abs(A[i][j]));
    const double eps = 1e-10 * scale;

    int pivot_col[3] = {-1, -1, -1};
    int rank = 0;
    for (int col = 0; col < dim && rank < f.rows; ++col) {
        int piv = -1;
        double best = eps;
        for (int r = rank; r < f.rows; ++r)
            if (std::abs(A[r][col]) > best) {
                best = std::abs(A[r][col]);
                piv = r;
            }
        if (piv < 0) continue;
        for (int j = 0; j <= 3; ++j) std::swap(A[piv][j], A[rank][j]);
        for (int r = 0; r < f.rows; ++r) {
            if (r == rank) continue;
            const double fmul = A[r][col] / A[rank][col];
            for (int j = 0; j <= 3; ++j) A[r][j] -= fmul * A[rank][j];
        }
        pivot_col[rank] = col;
        ++rank;
    }
    for (int r = rank; r < f.rows; ++r)
        if (std::abs(A[r][3]) > eps) return false;  // inconsistent
    if (rank < f.rows) return false;                // duplicate face

    x0 = {0.0, 0.0, 0.0};
    bool is_pivot[3] = {false, false, false};
    for (int r = 0; r < rank; ++r) is_pivot[pivot_col[r]] = true;
    for (int r = 0; r < rank; ++r) x0[pivot_col[r]] = A[r][3] / A[r][pivot_col[r]];

    null_dim = 0;
    for (int col = 0; col < dim; ++col) {
        if (is_pivot[col]) continue;
        double dir[3] = {0, 0, 0};
        dir[col] = 1.0;
        for (int r = 0; r < rank; ++r)
            dir[pivot_col[r]] = -A[r][col] / A[r][pivot_col[r]];
        for (int j = 0; j < 3; ++j) N[j][null_dim] = dir[j];
        ++null_dim;
    }
    return true;
}

}  // namespace

BoxMaxResult max_quadratic(const QuadForm& q, const std::array<double, 3>& lo,
                           const std::array<double, 3>& hi,
                           const std::vector<LinCon>& cons) {
    const int d = q.dim;
    BoxMaxResult best;
    best.value = -std::numeric_limits<double>::infinity();

    double span = 1.0;
    for (int i = 0; i < d; ++i) span = std::max(span, std::abs(lo[i]) + std::abs(hi[i]));
    const double feas_tol = 1e-7 * span;

    auto consider = [&](const std::array<double, 3>& x) {
        for (int i = 0; i < d; ++i)
            if (x[i] < lo[i] - feas_tol || x[i] > hi[i] + feas_tol) return;
        for (const LinCon& c : cons) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += c.a[i] * x[i];
            if (s > c.b + feas_tol * (1.0 + std::abs(c.b) / span)) return;
        }
        std::array<double, 3> xc = x;
        for (int i = 0; i < d; ++i) xc[i] = std::clamp(xc[i], lo[i], hi[i]);
        const double val = q.eval(xc);
        if (val > best.value) {
            best.value = val;
            best.x = xc;
        }
    };

    if (d == 0) {
        best.value = q.c;
        return best;
    }

    // Active-set items: coordinate at lo, coordinate at hi, constraint tight.
    struct Item {
        int kind;  // 0 = lo, 1 = hi, 2 = constraint
        int idx;
    };
    std::vector<Item> items;
    for (int i = 0; i < d; ++i) {
        items.push_back({0, i});
        items.push_back({1, i});
    }
    for (size_t j = 0; j < cons.size(); ++j) items.push_back({2, static_cast<int>(j)});
    const int ni = static_cast<int>(items.size());

    std::vector<std::vector<int>> subsets{{}};
    for (int a = 0; a < ni; ++a) {
        subsets.push_back({a});
        for (int b = a + 1; b < ni; ++b) {
            if (d < 2) break;
            subsets.push_back({a, b});
            for (int c = b + 1; c < ni; ++c) {
                if (d < 3) break;
                subsets.push_back({a, b, c});
            }
        }
    }

    for (const auto& sub : subsets) {
        // Skip sets fixing the same coordinate twice.
        bool bad = false;
        for (size_t a = 0; a < sub.size() && !bad; ++a)
            for (size_t b = a + 1; b < sub.size() && !bad; ++b) {
                const Item &ia = items[sub[a]], &ib = items[sub[b]];
                if (ia.kind <= 1 && ib.kind <= 1 && ia.idx == ib.idx) bad = true;
            }
        if (bad) continue;

        Face f;
        for (int s : sub) {
            const Item& it = items[s];
            if (it.kind <= 1) {
                f.E[f.rows][it.idx] = 1.0;
                f.rhs[f.rows] = it.kind == 0 ? lo[it.idx] : hi[it.idx];
            } else {
                for (int j = 0; j < d; ++j) f.E[f.rows][j] = cons[it.idx].a[j];
                f.rhs[f.rows] = cons[it.idx].b;
            }
            ++f.rows;
        }

        std::array<double, 3> x0{};
        double N[3][3] = {};
        int nd = 0;
        if (f.rows == 0) {
            x0 = {0, 0, 0};
            nd = d;
            for (int j = 0; j < d; ++j) N[j][j] = 1.0;
        } else if (!affine_subspace(f, d, x0, N, nd)) {
            continue;
        }

        if (nd == 0) {
            consider(x0);
            continue;
        }

        // Stationary point of the restricted quadratic: H t = -g with
        // H = N^T (2M) N and g = N^T (2M x0 + v).
        double H[3][3] = {};
        double g[3] = {};
        for (int r = 0; r < nd; ++r) {
            for (int cidx = 0; cidx < nd; ++cidx) {
                double s = 0.0;
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) s += N[i][r] * 2.0 * q.M[i][j] * N[j][cidx];
                H[r][cidx] = s;
            }
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                double grad = q.v[i];
                for (int j = 0; j < d; ++j) grad += 2.0 * q.M[i][j] * x0[j];
                s += N[i][r] * grad;
            }
            g[r] = -s;
        }
        double t[3] = {};
        if (!solve_small(nd, H, g, t, 0.0)) continue;
        std::array<double, 3> x = x0;
        for (int i = 0; i < d; ++i)
            for (int r = 0; r < nd; ++r) x[i] += N[i][r] * t[r];
        consider(x);
    }

    return best;
}

}  // namespace ssctm::detail
