#include "ssctm/markov.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ssctm/errors.hpp"

namespace ssctm {

namespace {

// Generator matrix with -row-sum diagonal: L[s][s'] = lambda_{s,s'} off
// diagonal, L[s][s] = -sum_{s' != s} lambda_{s,s'}.
Eigen::MatrixXd generator(const MarkovCapacityModel& markov) {
    const int m = markov.mode_count;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    for (int s = 0; s < m; ++s) {
        double out = 0.0;
        for (int t = 0; t < m; ++t) {
            if (t == s) continue;
            L(s, t) = markov.transition_rates_per_hr[s][t];
            out += markov.transition_rates_per_hr[s][t];
        }
        L(s, s) = -out;
    }
    return L;
}

}  // namespace

std::vector<double> steady_state_probs(const MarkovCapacityModel& markov) {
    const int m = markov.mode_count;
    if (m == 1) return {1.0};

    const Eigen::MatrixXd L = generator(markov);
    // p solves L^T p = 0; replace one equation with the normalization row.
    Eigen::MatrixXd A = L.transpose();
    const double scale = A.cwiseAbs().maxCoeff();
    if (!(scale > 0)) throw SingularChain("all transition rates are zero");

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-12);
    if (lu.rank() != m - 1)
        throw SingularChain("balance system rank " + std::to_string(lu.rank()) +
                            ", expected " + std::to_string(m - 1));

    Eigen::MatrixXd B(m + 1, m);
    B.topRows(m) = A / scale;
    B.row(m).setConstant(1.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs(m) = 1.0;
    Eigen::VectorXd p = B.colPivHouseholderQr().solve(rhs);

    std::vector<double> out(m);
    for (int s = 0; s < m; ++s) {
        if (p(s) < 0 && p(s) > -1e-12) p(s) = 0.0;
        if (p(s) < 0) throw SingularChain("negative stationary probability");
        out[s] = p(s);
    }
    return out;
}

CapacityStats capacity_stats(const MarkovCapacityModel& markov,
                             const std::vector<double>& p, int cell) {
    CapacityStats st;
    st.max = markov.max_capacity(cell);
    st.min = markov.min_capacity(cell);
    st.mean = 0.0;
    for (int s = 0; s < markov.mode_count; ++s) st.mean += p[s] * markov.capacities[s][cell];
    return st;
}

double balance_residual(const MarkovCapacityModel& markov, const std::vector<double>& p) {
    const int m = markov.mode_count;
    double worst = 0.0;
    for (int s = 0; s < m; ++s) {
        double in = 0.0, out = 0.0;
        for (int t = 0; t < m; ++t) {
            in += p[t] * markov.transition_rates_per_hr[t][s];
            out += p[s] * markov.transition_rates_per_hr[s][t];
        }
        worst = std::max(worst, std::abs(in - out));
    }
    return worst;
}

}  // namespace ssctm
