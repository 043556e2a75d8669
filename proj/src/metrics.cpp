#include "cluslab/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cluslab {

std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost) {
    // Kuhn-Munkres with potentials, O(n^3).
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> rowsol(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j]) rowsol[p[j] - 1] = j - 1;
    return rowsol;
}

double misclassification_error(const Partition& g, const Partition& g_star) {
    if (g.n() != g_star.n())
        throw std::invalid_argument("misclassification_error: length mismatch");
    const int n = g.n();
    if (n == 0) return 0.0;
    // Overlap counts, padded to a square so partitions with different numbers
    // of nonempty groups still get a full assignment (empty groups allowed).
    const int S = std::max(g.K, g_star.K);
    std::vector<std::vector<double>> cost(S, std::vector<double>(S, 0.0));
    for (int i = 0; i < n; ++i) cost[g_star.labels[i]][g.labels[i]] -= 1.0;
    const auto sol = hungarian_assignment(cost);
    double matched = 0;
    for (int k = 0; k < S; ++k) matched -= cost[k][sol[k]];
    return 1.0 - matched / n;
}

Eigen::MatrixXd partnership_matrix(const Partition& g) {
    const int n = g.n();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (g.labels[i] == g.labels[j]) m(i, j) = 1.0;
    return m;
}

double partnership_mse(const Eigen::MatrixXd& m_hat, const Eigen::MatrixXd& m_star) {
    if (m_hat.rows() != m_star.rows() || m_hat.cols() != m_star.cols())
        throw std::invalid_argument("partnership_mse: shape mismatch");
    const auto n = m_hat.rows();
    double sum = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = m_hat(i, j) - m_star(i, j);
            sum += d * d;
        }
    return sum / (static_cast<double>(n) * (n - 1));
}

Eigen::MatrixXd normalized_partnership(const Partition& g) {
    const int n = g.n();
    const auto sizes = g.group_sizes();
    for (int i = 0; i < n; ++i)
        if (sizes[g.labels[i]] == 0)
            throw std::invalid_argument("normalized_partnership: empty referenced group");
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (g.labels[i] == g.labels[j]) b(i, j) = 1.0 / sizes[g.labels[i]];
    return b;
}

RationalMatrix normalized_partnership_exact(const Partition& g) {
    const int n = g.n();
    const auto sizes = g.group_sizes();
    RationalMatrix b(n, std::vector<Rational>(n, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (g.labels[i] == g.labels[j]) b[i][j] = Rational(1, sizes[g.labels[i]]);
    return b;
}

RationalMatrix rational_matmul(const RationalMatrix& a, const RationalMatrix& b) {
    const auto n = a.size();
    RationalMatrix out(n, std::vector<Rational>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            if (a[i][k] == 0) continue;
            for (std::size_t j = 0; j < n; ++j) out[i][j] += a[i][k] * b[k][j];
        }
    return out;
}

L1Discrepancy b_l1_discrepancy(const Partition& g_star, const Partition& g) {
    if (g.n() != g_star.n()) throw std::invalid_argument("b_l1_discrepancy: length mismatch");
    const Eigen::MatrixXd bs = normalized_partnership(g_star);
    const Eigen::MatrixXd b = normalized_partnership(g);
    L1Discrepancy d;
    d.entrywise = (bs - bs * b).cwiseAbs().sum();
    const int n = g.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (g_star.labels[i] != g_star.labels[j]) d.cross_block += std::abs(b(i, j));
    d.cross_block *= 2.0;
    if (std::abs(d.entrywise - d.cross_block) > 1e-8 * (1 + d.entrywise))
        throw std::logic_error("b_l1_discrepancy: the two routes disagree");
    return d;
}

Rational b_l1_discrepancy_exact(const Partition& g_star, const Partition& g) {
    if (g.n() != g_star.n())
        throw std::invalid_argument("b_l1_discrepancy_exact: length mismatch");
    const auto bs = normalized_partnership_exact(g_star);
    const auto b = normalized_partnership_exact(g);
    const auto prod = rational_matmul(bs, b);
    Rational sum = 0;
    const int n = g.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Rational d = bs[i][j] - prod[i][j];
            if (d < 0) d = -d;
            sum += d;
        }
    return sum;
}

double kmeans_criterion(const Eigen::MatrixXd& data, const Partition& g) {
    const int n = g.n();
    if (data.rows() != n) throw std::invalid_argument("kmeans_criterion: shape mismatch");
    const auto sizes = g.group_sizes();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g.K, data.cols());
    for (int i = 0; i < n; ++i) sums.row(g.labels[i]) += data.row(i);
    double crit = 0;
    for (int i = 0; i < n; ++i) {
        const int k = g.labels[i];
        crit += (data.row(i) - sums.row(k) / sizes[k]).squaredNorm();
    }
    return crit;
}

std::pair<double, double> err_vs_partnership_check(const Partition& g, const Partition& g_star) {
    if (g.n() != g_star.n())
        throw std::invalid_argument("err_vs_partnership_check: length mismatch");
    const int n = g.n();
    double frob = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double a = g.labels[i] == g.labels[j] ? 1.0 : 0.0;
            const double b = g_star.labels[i] == g_star.labels[j] ? 1.0 : 0.0;
            frob += (a - b) * (a - b);
        }
    const double lhs = n > 1 ? frob / (static_cast<double>(n) * (n - 1)) : 0.0;
    return {lhs, 2.0 * misclassification_error(g, g_star)};
}

}  // namespace cluslab
