#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cluslab/rational.hpp"

namespace cluslab::lowdegree {

// Sparse nonnegative-integer matrix, viewed as a bipartite multigraph between
// point nodes (rows) and coordinate nodes (columns). Rows 0 and 1 play the
// distinguished role of the pair whose partnership is being estimated.
struct AlphaMatrix {
    int n = 0;  // ambient row bound
    int p = 0;  // ambient column bound
    // sorted by (row, col); multiplicities are >= 1
    std::vector<std::array<int, 3>> entries;

    static AlphaMatrix make(int n, int p,
                            const std::map<std::pair<int, int>, int>& cells);

    int total() const;  // |alpha|, number of multi-edges
    bool empty() const { return entries.empty(); }

    // Encoding used as memo key and in CSV export: "i,j,mult;..." in sorted order.
    std::string encode() const;
};

struct GraphStats {
    int m = 0;          // non-isolated rows
    int r = 0;          // non-isolated columns
    int edges = 0;      // |alpha| with multiplicity
    int l = 0;          // m + r
    int cc = 0;         // connected components over non-isolated nodes (0 if empty)
    bool connected = false;
    bool has_rows_1_2 = false;       // rows 0 and 1 both non-isolated
    int min_col_distinct_degree = 0; // min over columns of distinct row neighbours
};

GraphStats graph_stats(const AlphaMatrix& alpha);

// True iff the restricted graph is connected, spans both distinguished rows,
// and every column node touches at least two distinct rows. When false the
// joint cumulant below is identically zero.
bool null_cumulant_filter(const AlphaMatrix& alpha);

// Exact probability, over the K^m uniform group assignments of the support
// rows, that every column's multiplicity sum within every induced group is
// even. Enumeration cost K^m; throws if m exceeds max_rows.
Rational parity_probability(const AlphaMatrix& gamma, int K, int max_rows = 10);

// E[X^gamma] = eps^{|gamma|} * parity_probability.
ScaledRational moment(const AlphaMatrix& gamma, int K, int max_rows = 10);

// E[x X^gamma] with x the indicator that rows 0 and 1 share a group.
ScaledRational cross_moment(const AlphaMatrix& gamma, int K, int max_rows = 10);

// Joint-cumulant table with memoization over the sub-lattice beta <= alpha.
// With use_filter the null-cumulant conditions short-circuit to zero; without
// it the defining recursion runs in full (the test oracle). Degrees beyond
// max_degree are rejected; raise it explicitly for larger enumerations.
class CumulantTable {
  public:
    CumulantTable(int K, bool use_filter = true, int max_rows = 10, int max_degree = 6)
        : K_(K), use_filter_(use_filter), max_rows_(max_rows), max_degree_(max_degree) {}

    ScaledRational cumulant(const AlphaMatrix& alpha);

    int K() const { return K_; }

  private:
    int K_;
    bool use_filter_;
    int max_rows_;
    int max_degree_;
    std::unordered_map<std::string, Rational> memo_;
};

inline ScaledRational cumulant(const AlphaMatrix& alpha, int K, bool use_filter = true) {
    CumulantTable table(K, use_filter);
    return table.cumulant(alpha);
}

// Exhaustively verifies, over all set partitions of the support rows that are
// even with respect to gamma, that the group count obeys
// |G| <= |gamma|/2 - r + cc. Enumeration cost is the Bell number of m.
bool numbergroups_check(const AlphaMatrix& gamma, int max_rows = 8);

// Sum over all alpha in N^{n x p} with |alpha| <= D of kappa_alpha^2 / alpha!,
// at a concrete rational eps^2. Includes the |alpha| = 0 term 1/K^2. The
// enumeration is guarded: throws if the index set exceeds budget matrices.
Rational corr_bound_sum(int n, int p, int D, int K, const Rational& eps_sq,
                        std::uint64_t budget = 4'000'000);

struct BoundReport {
    double zeta = 0;           // p >= n smallness parameter
    double zeta_bar = 0;       // p <= n variant
    double corr_sq_upper = 0;  // (1/K^2)(1 + z/(1-sqrt z)^3) for the active z
    double mmse_lower = 0;     // 1/K - corr_sq_upper when applicable, else 0
    bool applicable = false;   // active z < 1
    bool p_ge_n = true;        // which regime (and which z) is active
    bool gaussian_prior_heuristic = false;  // formula reused for the Gaussian prior
};

BoundReport bound_report(int n, int p, int K, double delta_bar_sq, int D,
                         bool gaussian_prior = false);

struct MonteCarloEstimate {
    double estimate = 0;
    double stderr_ = 0;
};

// Monte Carlo oracle for moment(): noiseless signal draws at a concrete eps.
MonteCarloEstimate mc_moment(const AlphaMatrix& gamma, int K, double eps, int samples,
                             std::uint64_t seed);

// Fits the best polynomial of total degree <= D in the n*p data entries to
// x = 1{rows 0,1 share a group}, by least squares on a train split, and
// reports held-out MSE with a bootstrap standard error. Upper estimate of the
// degree-D MMSE, up to estimation error. Noise level is fixed at sigma = 1.
MonteCarloEstimate empirical_mmse(int n, int p, int K, double delta_bar_sq, int D, int samples,
                                  std::uint64_t seed, int feature_budget = 2000);

struct CumulantRow {
    std::string support_encoding;
    int degree = 0;  // |alpha|
    int m = 0;
    int r = 0;
    int cc = 0;
    BigInt kappa_numerator;
    BigInt kappa_denominator;
    int eps_degree = 0;
};

// All nonzero cumulants with |alpha| <= D over N^{n x p}, plus the alpha = 0 row.
std::vector<CumulantRow> cumulant_table(int n, int p, int D, int K,
                                        std::uint64_t budget = 4'000'000);
std::string cumulant_table_csv(const std::vector<CumulantRow>& rows);

// Number of matrices in N^{n x p} with |alpha| <= D, i.e. C(np + D, D);
// saturates at the budget cap.
std::uint64_t enumeration_size(int n, int p, int D, std::uint64_t cap);

}  // namespace cluslab::lowdegree
