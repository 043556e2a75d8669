#include "cluslab/cluster.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cluslab/metrics.hpp"
#include "cluslab/rng.hpp"

namespace cluslab {

namespace {

constexpr double kRelTol = 1e-12;

struct BnBState {
    const Eigen::MatrixXd& data;
    int n;
    int K;
    std::vector<int> assignment;
    std::vector<int> counts;
    Eigen::MatrixXd sums;            // K x p running group sums
    std::vector<double> sum_sq;      // ||sums.row(k)||^2, maintained incrementally
    std::vector<double> point_sq;    // ||Y_i||^2
    double partial = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<int> best_assignment;
    std::chrono::steady_clock::time_point deadline;
    bool has_deadline = false;
    bool exhausted = false;
    std::uint64_t nodes = 0;
};

// Cost increase from adding point i to group k; the partial criterion is
// non-decreasing along a branch, which is what makes it a valid bound.
double add_point(BnBState& st, int i, int k) {
    const int c = st.counts[k];
    double delta = 0;
    if (c > 0) {
        const double cross = st.sums.row(k).dot(st.data.row(i));
        const double new_sq = st.sum_sq[k] + 2 * cross + st.point_sq[i];
        delta = st.point_sq[i] - (new_sq / (c + 1) - st.sum_sq[k] / c);
        st.sum_sq[k] = new_sq;
    } else {
        st.sum_sq[k] = st.point_sq[i];
    }
    st.sums.row(k) += st.data.row(i);
    st.counts[k] += 1;
    st.partial += delta;
    return delta;
}

void remove_point(BnBState& st, int i, int k, double delta) {
    st.counts[k] -= 1;
    st.sums.row(k) -= st.data.row(i);
    st.sum_sq[k] = st.counts[k] > 0 ? st.sums.row(k).squaredNorm() : 0.0;
    st.partial -= delta;
}

void bnb(BnBState& st, int i, int used) {
    if (st.exhausted) return;
    if ((++st.nodes & 0xFFF) == 0 && st.has_deadline &&
        std::chrono::steady_clock::now() > st.deadline) {
        st.exhausted = true;
        return;
    }
    if (i == st.n) {
        if (st.partial < st.best_cost) {
            st.best_cost = st.partial;
            st.best_assignment = st.assignment;
        }
        return;
    }
    const int cap = std::min(used, st.K - 1);
    for (int k = 0; k <= cap; ++k) {
        const double delta = add_point(st, i, k);
        st.assignment[i] = k;
        if (st.partial <= st.best_cost * (1 + kRelTol))
            bnb(st, i + 1, std::max(used, k + 1));
        remove_point(st, i, k, delta);
    }
}

}  // namespace

KMeansResult exact_kmeans(const Eigen::MatrixXd& data, int K,
                          std::chrono::milliseconds time_budget, int exhaustive_max_n) {
    const int n = static_cast<int>(data.rows());
    if (K < 1) throw std::invalid_argument("exact_kmeans: K must be >= 1");
    if (n == 0) throw std::invalid_argument("exact_kmeans: empty data");
    const bool has_budget = time_budget.count() > 0;
    if (!has_budget && n > exhaustive_max_n)
        throw std::invalid_argument("exact_kmeans: n too large without a time budget");

    BnBState st{data,
                n,
                K,
                std::vector<int>(n, 0),
                std::vector<int>(K, 0),
                Eigen::MatrixXd::Zero(K, data.cols()),
                std::vector<double>(K, 0.0),
                {},
                0.0,
                std::numeric_limits<double>::infinity(),
                {},
                {},
                false,
                false,
                0};
    st.point_sq.resize(n);
    for (int i = 0; i < n; ++i) st.point_sq[i] = data.row(i).squaredNorm();
    if (has_budget) {
        st.deadline = std::chrono::steady_clock::now() + time_budget;
        st.has_deadline = true;
    }
    bnb(st, 0, 0);

    KMeansResult res;
    if (st.best_assignment.empty()) {
        // budget hit before any leaf: fall back to everything in one group
        st.best_assignment.assign(n, 0);
        st.best_cost = kmeans_criterion(data, Partition(st.best_assignment, K));
    }
    res.partition = Partition(st.best_assignment, K).canonical();
    res.criterion = st.best_cost;
    res.optimal = !st.exhausted;
    return res;
}

namespace {

std::vector<int> assign_nearest(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centers) {
    const int n = static_cast<int>(data.rows());
    const int K = static_cast<int>(centers.rows());
    std::vector<int> lab(n, 0);
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            const double d = (data.row(i) - centers.row(k)).squaredNorm();
            if (d < best) {
                best = d;
                lab[i] = k;
            }
        }
    }
    return lab;
}

Eigen::MatrixXd dsq_weighted_init(const Eigen::MatrixXd& data, int K, std::uint64_t seed) {
    const int n = static_cast<int>(data.rows());
    Eigen::MatrixXd centers(K, data.cols());
    centers.row(0) = data.row(static_cast<int>(rng::bounded(seed, 0, 0, n)));
    Eigen::VectorXd dist(n);
    for (int i = 0; i < n; ++i) dist(i) = (data.row(i) - centers.row(0)).squaredNorm();
    for (int k = 1; k < K; ++k) {
        const double total = dist.sum();
        int chosen = 0;
        if (total > 0) {
            double u = rng::uniform(seed, k, 0) * total;
            for (int i = 0; i < n; ++i) {
                u -= dist(i);
                if (u <= 0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<int>(rng::bounded(seed, k, 1, n));
        }
        centers.row(k) = data.row(chosen);
        for (int i = 0; i < n; ++i)
            dist(i) = std::min(dist(i), (data.row(i) - centers.row(k)).squaredNorm());
    }
    return centers;
}

}  // namespace

LloydResult lloyd(const Eigen::MatrixXd& data, int K, int restarts, int max_iters,
                  std::uint64_t seed) {
    if (restarts < 1) throw std::invalid_argument("lloyd: restarts must be >= 1");
    const int n = static_cast<int>(data.rows());
    LloydResult best;
    best.criterion = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        const std::uint64_t rs = rng::substream(seed, 0x6C6C6F7964ull + r);
        Eigen::MatrixXd centers = dsq_weighted_init(data, K, rs);
        std::vector<int> lab = assign_nearest(data, centers);
        std::vector<double> history;
        double crit = kmeans_criterion(data, Partition(lab, K));
        history.push_back(crit);
        for (int it = 0; it < max_iters; ++it) {
            // update step
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, data.cols());
            std::vector<int> counts(K, 0);
            for (int i = 0; i < n; ++i) {
                sums.row(lab[i]) += data.row(i);
                ++counts[lab[i]];
            }
            for (int k = 0; k < K; ++k) {
                if (counts[k] > 0) {
                    centers.row(k) = sums.row(k) / counts[k];
                } else {
                    // reseed an empty cluster from the farthest point
                    int far = 0;
                    double far_d = -1;
                    for (int i = 0; i < n; ++i) {
                        const double d = (data.row(i) - centers.row(lab[i])).squaredNorm();
                        if (d > far_d) {
                            far_d = d;
                            far = i;
                        }
                    }
                    centers.row(k) = data.row(far);
                }
            }
            std::vector<int> next = assign_nearest(data, centers);
            const double next_crit = kmeans_criterion(data, Partition(next, K));
            if (next_crit > crit * (1 + kRelTol)) break;  // guard monotone descent
            const bool converged = next == lab;
            lab = std::move(next);
            crit = next_crit;
            history.push_back(crit);
            if (converged) break;
        }
        if (crit < best.criterion) {
            best.criterion = crit;
            best.partition = Partition(lab, K).canonical();
            best.criterion_history = std::move(history);
        }
    }
    return best;
}

Partition single_linkage(const Eigen::MatrixXd& data, int K) {
    const int n = static_cast<int>(data.rows());
    if (K > n) throw std::invalid_argument("single_linkage: K > n");
    if (K < 1) throw std::invalid_argument("single_linkage: K must be >= 1");

    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist(i, j) = (data.row(i) - data.row(j)).squaredNorm();

    // group id = smallest member index
    std::vector<int> group(n);
    for (int i = 0; i < n; ++i) group[i] = i;
    int groups = n;
    while (groups > K) {
        double best = std::numeric_limits<double>::infinity();
        int best_a = -1, best_b = -1;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (group[i] == group[j]) continue;
                const int a = std::min(group[i], group[j]);
                const int b = std::max(group[i], group[j]);
                const double d = dist(i, j);
                if (d < best || (d == best && (a < best_a || (a == best_a && b < best_b)))) {
                    best = d;
                    best_a = a;
                    best_b = b;
                }
            }
        for (int i = 0; i < n; ++i)
            if (group[i] == best_b) group[i] = best_a;
        --groups;
    }
    // compress ids into [0, K)
    std::vector<int> lab(n);
    std::vector<int> remap(n, -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (remap[group[i]] < 0) remap[group[i]] = next++;
        lab[i] = remap[group[i]];
    }
    return Partition(std::move(lab), K).canonical();
}

Partition spectral_cluster(const Eigen::MatrixXd& data, int K, std::uint64_t seed) {
    const int n = static_cast<int>(data.rows());
    if (K > n) throw std::invalid_argument("spectral_cluster: K > n");
    const Eigen::MatrixXd gram = data * data.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectral_cluster: eigensolver failed (degenerate input)");
    // eigenvalues come out ascending; take the trailing K columns, scaled by
    // sqrt(eigenvalue) so the embedding carries the principal-component
    // geometry (a flat direction must not blow up to unit size)
    Eigen::MatrixXd embedding = solver.eigenvectors().rightCols(K);
    for (int k = 0; k < K; ++k) {
        const double lambda = std::max(solver.eigenvalues()(n - K + k), 0.0);
        embedding.col(k) *= std::sqrt(lambda);
    }
    return lloyd(embedding, K, 8, 100, rng::substream(seed, 0x73706563ull)).partition;
}

}  // namespace cluslab
