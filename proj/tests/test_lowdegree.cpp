#include <doctest.h>

#include <cmath>

#include "cluslab/lowdegree.hpp"
#include "cluslab/partition.hpp"
#include "cluslab/rng.hpp"
#include "cluslab/verify.hpp"

using namespace cluslab;
using lowdegree::AlphaMatrix;

namespace {

AlphaMatrix make(int n, int p, std::map<std::pair<int, int>, int> cells) {
    return AlphaMatrix::make(n, p, cells);
}

// Independent oracle: the classical set-partition expansion of a joint
// cumulant, sum over partitions pi of the |alpha|+1 items (the indicator plus
// one item per multi-edge) of (-1)^(|pi|-1) (|pi|-1)! times the product of
// block moments. Exercises only the moment routines, never the recursion.
Rational classical_cumulant(const AlphaMatrix& alpha, int K) {
    std::vector<std::pair<int, int>> instance_cell;
    for (const auto& e : alpha.entries)
        for (int t = 0; t < e[2]; ++t) instance_cell.push_back({e[0], e[1]});
    const int items = static_cast<int>(instance_cell.size()) + 1;
    Rational total = 0;
    for_each_set_partition(items, items, [&](const std::vector<int>& rgs) {
        int blocks = 0;
        for (int v : rgs) blocks = std::max(blocks, v + 1);
        Rational prod = 1;
        for (int b = 0; b < blocks; ++b) {
            std::map<std::pair<int, int>, int> cells;
            bool has_indicator = rgs[0] == b;
            for (int it = 1; it < items; ++it)
                if (rgs[it] == b) ++cells[instance_cell[it - 1]];
            const auto block = AlphaMatrix::make(alpha.n, alpha.p, cells);
            prod *= has_indicator ? lowdegree::cross_moment(block, K).coeff
                                  : lowdegree::moment(block, K).coeff;
            if (prod == 0) break;
        }
        if (prod == 0) return;
        const Rational weight = Rational(factorial(static_cast<unsigned>(blocks - 1)));
        total += (blocks % 2 == 1 ? weight : -weight) * prod;
    });
    return total;
}

}  // namespace

TEST_CASE("lattice recursion matches the classical partition expansion") {
    for (int K : {2, 3}) {
        lowdegree::CumulantTable table(K);
        std::vector<int> cells(6, 0);
        auto rec = [&](auto&& self, int cell, int remaining) -> void {
            if (cell == 6) {
                std::map<std::pair<int, int>, int> sparse;
                for (int t = 0; t < 6; ++t)
                    if (cells[t] > 0) sparse[{t / 2, t % 2}] = cells[t];
                if (sparse.empty()) return;
                const auto alpha = AlphaMatrix::make(3, 2, sparse);
                CHECK(table.cumulant(alpha).coeff == classical_cumulant(alpha, K));
                return;
            }
            for (int mult = 0; mult <= remaining; ++mult) {
                cells[cell] = mult;
                self(self, cell + 1, remaining - mult);
            }
            cells[cell] = 0;
        };
        rec(rec, 0, 4);
    }
}

TEST_CASE("graph stats") {
    const AlphaMatrix empty = make(3, 2, {});
    const auto ge = lowdegree::graph_stats(empty);
    CHECK(ge.edges == 0);
    CHECK(ge.m == 0);
    CHECK(ge.r == 0);
    CHECK(ge.cc == 0);

    const auto g1 = lowdegree::graph_stats(make(3, 2, {{{0, 0}, 1}, {{1, 0}, 1}}));
    CHECK(g1.m == 2);
    CHECK(g1.r == 1);
    CHECK(g1.edges == 2);
    CHECK(g1.l == 3);
    CHECK(g1.cc == 1);
    CHECK(g1.connected);
    CHECK(g1.has_rows_1_2);
    CHECK(g1.min_col_distinct_degree == 2);

    const auto g2 = lowdegree::graph_stats(make(3, 2, {{{0, 0}, 1}, {{2, 1}, 2}}));
    CHECK(g2.cc == 2);
    CHECK_FALSE(g2.connected);
    CHECK(g2.edges == 3);
}

TEST_CASE("null cumulant filter") {
    CHECK_FALSE(lowdegree::null_cumulant_filter(make(2, 1, {{{0, 0}, 2}})));
    CHECK(lowdegree::null_cumulant_filter(make(2, 1, {{{0, 0}, 1}, {{1, 0}, 1}})));
    CHECK_FALSE(lowdegree::null_cumulant_filter(make(2, 2, {{{0, 0}, 1}, {{1, 1}, 1}})));
    CHECK_THROWS(lowdegree::null_cumulant_filter(make(2, 2, {})));
}

TEST_CASE("parity probability") {
    CHECK(lowdegree::parity_probability(make(1, 1, {{{0, 0}, 2}}), 3) == 1);
    CHECK(lowdegree::parity_probability(make(1, 1, {{{0, 0}, 1}}), 3) == 0);
    for (int K : {2, 3, 5}) {
        CHECK(lowdegree::parity_probability(make(2, 1, {{{0, 0}, 1}, {{1, 0}, 1}}), K) ==
              Rational(1, K));
        const auto cycle =
            make(2, 2, {{{0, 0}, 1}, {{1, 0}, 1}, {{0, 1}, 1}, {{1, 1}, 1}});
        CHECK(lowdegree::parity_probability(cycle, K) == Rational(1, K));
    }
}

TEST_CASE("moments") {
    const auto one = lowdegree::moment(make(2, 1, {}), 4);
    CHECK(one.eps_degree == 0);
    CHECK(one.coeff == 1);

    const auto sq = lowdegree::moment(make(1, 1, {{{0, 0}, 2}}), 4);
    CHECK(sq.eps_degree == 2);
    CHECK(sq.coeff == 1);

    const auto pair = lowdegree::moment(make(2, 1, {{{0, 0}, 1}, {{1, 0}, 1}}), 2);
    CHECK(pair.eps_degree == 2);
    CHECK(pair.coeff == Rational(1, 2));
}

TEST_CASE("cross moments") {
    for (int K : {2, 3}) {
        const auto base = lowdegree::cross_moment(make(2, 1, {}), K);
        CHECK(base.eps_degree == 0);
        CHECK(base.coeff == Rational(1, K));

        // support away from the distinguished rows factorizes
        const auto gamma = make(4, 1, {{{2, 0}, 1}, {{3, 0}, 1}});
        const auto factored = lowdegree::cross_moment(gamma, K);
        CHECK(factored.coeff == lowdegree::moment(gamma, K).coeff / K);
    }
    const auto tied = lowdegree::cross_moment(make(2, 1, {{{0, 0}, 1}, {{1, 0}, 1}}), 2);
    CHECK(tied.eps_degree == 2);
    CHECK(tied.coeff == Rational(1, 2));
}

TEST_CASE("cumulants") {
    for (int K : {2, 3, 4}) {
        CHECK(lowdegree::cumulant(make(2, 1, {}), K).coeff == Rational(1, K));
        CHECK(lowdegree::cumulant(make(1, 1, {{{0, 0}, 1}}), K, true).coeff == 0);
        CHECK(lowdegree::cumulant(make(1, 1, {{{0, 0}, 1}}), K, false).coeff == 0);

        // hand recursion over the four-element sub-lattice
        const auto kappa = lowdegree::cumulant(make(2, 1, {{{0, 0}, 1}, {{1, 0}, 1}}), K);
        CHECK(kappa.eps_degree == 2);
        CHECK(kappa.coeff == Rational(1, K) * (1 - Rational(1, K)));
    }
}

TEST_CASE("cumulant homogeneity in the scale") {
    lowdegree::CumulantTable table(3);
    const auto a = make(3, 2, {{{0, 0}, 1}, {{1, 0}, 1}, {{1, 1}, 2}, {{2, 1}, 2}});
    CHECK(table.cumulant(a).eps_degree == a.total());
}

TEST_CASE("number-of-groups bound checks") {
    const auto cycle = make(2, 2, {{{0, 0}, 1}, {{1, 0}, 1}, {{0, 1}, 1}, {{1, 1}, 1}});
    CHECK(lowdegree::numbergroups_check(cycle));
    CHECK(lowdegree::numbergroups_check(make(2, 1, {{{0, 0}, 2}, {{1, 0}, 2}})));
    // an odd column admits no even partition
    CHECK(lowdegree::numbergroups_check(make(2, 1, {{{0, 0}, 1}, {{1, 0}, 2}})));
}

TEST_CASE("correlation bound sum") {
    CHECK(lowdegree::corr_bound_sum(2, 1, 0, 2, Rational(1, 10)) == Rational(1, 4));
    CHECK(lowdegree::corr_bound_sum(2, 1, 1, 2, Rational(1, 10)) == Rational(1, 4));
    CHECK(lowdegree::corr_bound_sum(3, 2, 1, 3, Rational(1, 7)) == Rational(1, 9));
    // single surviving matrix: both rows once in the only column
    const Rational sum = lowdegree::corr_bound_sum(2, 1, 2, 2, Rational(1, 10));
    CHECK(sum == Rational(1, 4) + Rational(1, 100) / 16);
    CHECK_THROWS(lowdegree::corr_bound_sum(40, 40, 12, 2, Rational(1, 10), 1000));
}

TEST_CASE("bound report") {
    SUBCASE("no signal reduces to the trivial gap") {
        const auto rep = lowdegree::bound_report(10, 20, 4, 0.0, 3);
        CHECK(rep.zeta == 0.0);
        CHECK(rep.applicable);
        CHECK(rep.mmse_lower == doctest::Approx(0.25 - 0.0625));
    }
    SUBCASE("worked point") {
        const auto rep = lowdegree::bound_report(64, 64, 8, 0.05, 1);
        CHECK(rep.zeta == doctest::Approx(6.25e-4));
        CHECK(rep.mmse_lower == doctest::Approx(0.10936).epsilon(1e-4));
        CHECK(rep.p_ge_n);
    }
    SUBCASE("low-dimension regime uses the variant parameter") {
        const auto rep = lowdegree::bound_report(100, 10, 2, 0.01, 1);
        CHECK_FALSE(rep.p_ge_n);
        CHECK(rep.zeta_bar == doctest::Approx(rep.zeta * 100.0 / 10.0));
    }
    SUBCASE("vacuous regime is flagged, not thrown") {
        const auto rep = lowdegree::bound_report(4, 4, 2, 10.0, 3);
        CHECK_FALSE(rep.applicable);
        CHECK(rep.mmse_lower == 0.0);
    }
    SUBCASE("gaussian-prior reports carry the heuristic flag") {
        CHECK(lowdegree::bound_report(8, 16, 2, 0.01, 1, true).gaussian_prior_heuristic);
        CHECK_FALSE(lowdegree::bound_report(8, 16, 2, 0.01, 1).gaussian_prior_heuristic);
    }
}

TEST_CASE("monte carlo moment oracle") {
    SUBCASE("even multiplicities have zero variance") {
        const auto est = lowdegree::mc_moment(make(1, 1, {{{0, 0}, 2}}), 3, 0.5, 2000, 1);
        CHECK(est.estimate == doctest::Approx(0.25));
        CHECK(est.stderr_ == 0.0);
    }
    SUBCASE("paired rows at unit scale") {
        const auto est =
            lowdegree::mc_moment(make(2, 1, {{{0, 0}, 1}, {{1, 0}, 1}}), 2, 1.0, 100000, 2);
        CHECK(std::abs(est.estimate - 0.5) <= 4 * est.stderr_ + 1e-12);
    }
    SUBCASE("odd columns vanish") {
        const auto est = lowdegree::mc_moment(make(1, 1, {{{0, 0}, 1}}), 2, 1.0, 100000, 3);
        CHECK(std::abs(est.estimate) <= 4 * est.stderr_ + 1e-12);
    }
    CHECK_THROWS(lowdegree::mc_moment(make(1, 1, {{{0, 0}, 1}}), 2, 1.0, 10, 1));
}

TEST_CASE("regression estimate of the degree-D error") {
    SUBCASE("degree zero is the variance of the indicator") {
        const auto est = lowdegree::empirical_mmse(2, 1, 2, 0.5, 0, 4000, 11);
        CHECK(std::abs(est.estimate - 0.25) <= 4 * est.stderr_ + 0.01);
    }
    SUBCASE("no signal stays at the trivial error") {
        const auto est = lowdegree::empirical_mmse(2, 2, 2, 0.0, 1, 4000, 12);
        CHECK(std::abs(est.estimate - 0.25) <= 4 * est.stderr_ + 0.01);
    }
    SUBCASE("feature budget guard") {
        CHECK_THROWS(lowdegree::empirical_mmse(10, 10, 2, 0.1, 4, 100000, 1, 50));
    }
    SUBCASE("sample floor guard") {
        CHECK_THROWS(lowdegree::empirical_mmse(2, 2, 2, 0.1, 2, 10, 1));
    }
}

TEST_CASE("at strong signal the regression sits between the exact bound and trivial") {
    // two points, one coordinate, eps^2 = 1: the only surviving degree-2
    // cumulant is the paired one, kappa = 1/4, so the correlation sum is
    // 1/4 + 1/16 = 5/16 and the implied lower bound is 1/2 - 5/16 = 3/16
    const Rational sum = lowdegree::corr_bound_sum(2, 1, 2, 2, Rational(1));
    CHECK(sum == Rational(5, 16));
    const auto est = lowdegree::empirical_mmse(2, 1, 2, 1.0, 2, 20000, 909);
    CHECK(est.estimate >= 3.0 / 16.0 - 3 * est.stderr_);
    CHECK(est.estimate <= 0.25 - 0.005);  // the pair product carries real signal
}

TEST_CASE("scaled rationals enforce homogeneity") {
    ScaledRational a{2, Rational(1, 3)};
    ScaledRational b{4, Rational(1, 5)};
    CHECK_THROWS(a += b);
    CHECK((a * b).eps_degree == 6);
    CHECK(ScaledRational(4, Rational(3, 2)).at_eps_sq(Rational(1, 4)) == Rational(3, 32));
}

TEST_CASE("cumulant table export") {
    const auto rows = lowdegree::cumulant_table(2, 1, 2, 2);
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0].support_encoding.empty());
    CHECK(rows[0].kappa_numerator == 1);
    CHECK(rows[0].kappa_denominator == 2);
    bool found_pair = false;
    for (const auto& row : rows)
        if (row.support_encoding == "0:0:1;1:0:1") {
            found_pair = true;
            CHECK(row.kappa_numerator == 1);
            CHECK(row.kappa_denominator == 4);
            CHECK(row.eps_degree == 2);
            CHECK(row.m == 2);
            CHECK(row.r == 1);
        }
    CHECK(found_pair);
    const auto csv = lowdegree::cumulant_table_csv(rows);
    CHECK(csv.find("support_encoding") == 0);
    CHECK(csv.find("0:0:1;1:0:1,2,2,1,1,1,4,2") != std::string::npos);
}

TEST_CASE("a corrupted parity oracle is caught with a counterexample") {
    const auto bad = [](const AlphaMatrix& g, int K) {
        return 1 - lowdegree::parity_probability(g, K);  // sign-flip style corruption
    };
    const auto check = cluslab::verify::check_parity_against_mc(bad, 7);
    CHECK_FALSE(check.passed);
    CHECK_FALSE(check.detail.empty());
}
