#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <vector>

#include "cluslab/partition.hpp"

namespace cluslab {

struct KMeansResult {
    Partition partition;
    double criterion = 0;
    bool optimal = true;  // false when a time budget ran out (best-so-far returned)
};

// Global minimizer of the within-group sum of squares over partitions of the
// rows into at most K nonempty groups. Enumerates restricted-growth strings
// with branch-and-bound pruning on the (monotone) partial criterion. Without
// a budget, n is capped at exhaustive_max_n; with one, returns best-so-far
// and clears `optimal` on exhaustion.
KMeansResult exact_kmeans(const Eigen::MatrixXd& data, int K,
                          std::chrono::milliseconds time_budget = std::chrono::milliseconds(0),
                          int exhaustive_max_n = 14);

struct LloydResult {
    Partition partition;
    double criterion = 0;
    std::vector<double> criterion_history;  // per iteration, best restart
};

// Lloyd heuristic: distance-squared-weighted seeding, empty clusters reseeded
// from the farthest point, best criterion over restarts.
LloydResult lloyd(const Eigen::MatrixXd& data, int K, int restarts, int max_iters,
                  std::uint64_t seed);

// Agglomerative merge loop: start from singletons and, while more than K
// groups remain, merge the pair with minimal single-linkage distance
// min_{i in A, j in B} ||Y_i - Y_j||^2. Ties broken on the lexicographically
// smallest pair of group representatives (smallest member index).
Partition single_linkage(const Eigen::MatrixXd& data, int K);

// Rows embedded on the top-K eigenvectors of the Gram matrix Y Y^T, then
// Lloyd in the embedding.
Partition spectral_cluster(const Eigen::MatrixXd& data, int K, std::uint64_t seed);

}  // namespace cluslab
