#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "cluslab/partition.hpp"
#include "cluslab/rational.hpp"

namespace cluslab {

// Proportion of misclassified points: (1/2n) min over label permutations of
// the summed symmetric differences, computed exactly via optimal assignment
// on the group-overlap matrix. Label-permutation invariant, in [0, 1].
double misclassification_error(const Partition& g, const Partition& g_star);

// Binary matrix M with M_ij = 1 iff i and j share a group; unit diagonal.
Eigen::MatrixXd partnership_matrix(const Partition& g);

// Off-diagonal squared error, normalized by n(n-1).
double partnership_mse(const Eigen::MatrixXd& m_hat, const Eigen::MatrixXd& m_star);

// B with B_ij = 1/|G_k| when i, j share group k, else 0. Orthogonal projector
// onto the span of the group indicators: B >= 0, B 1 = 1, B^2 = B,
// trace(B) = number of nonempty groups.
Eigen::MatrixXd normalized_partnership(const Partition& g);

struct L1Discrepancy {
    double entrywise = 0;    // ||B* - B* B||_1
    double cross_block = 0;  // 2 sum_{k != l} |B restricted to rows G*_k, cols G*_l|_1
};

// The two routes to ||B* - B* B||_1; they agree identically (asserted to
// 1e-10 in tests, exactly in the rational mode below).
L1Discrepancy b_l1_discrepancy(const Partition& g_star, const Partition& g);

// Exact-rational oracle for the same quantity (small n).
Rational b_l1_discrepancy_exact(const Partition& g_star, const Partition& g);

// Within-group sum of squared distances to the group mean.
double kmeans_criterion(const Eigen::MatrixXd& data, const Partition& g);

// Returns (||M^G - M*||_F^2 / (n(n-1)), 2*err(G, G*)); first <= second.
std::pair<double, double> err_vs_partnership_check(const Partition& g, const Partition& g_star);

// Exact-rational small dense matrices, used as the oracle for the projector
// identities above.
using RationalMatrix = std::vector<std::vector<Rational>>;

RationalMatrix normalized_partnership_exact(const Partition& g);
RationalMatrix rational_matmul(const RationalMatrix& a, const RationalMatrix& b);

// Minimum-cost assignment on a square cost matrix; returns the column chosen
// for each row. Exposed for tests against the brute-force oracle.
std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace cluslab
