#include <doctest.h>

#include <cmath>

#include "cluslab/metrics.hpp"
#include "cluslab/rng.hpp"

using namespace cluslab;

TEST_CASE("misclassification error basics") {
    const Partition a({0, 0, 1, 1}, 2);
    CHECK(misclassification_error(a, a) == 0.0);

    const Partition swapped({1, 1, 0, 0}, 2);
    CHECK(misclassification_error(swapped, a) == 0.0);

    // {0,1},{2,3} against {0,1,2},{3}: one point out of place
    const Partition b({0, 0, 0, 1}, 2);
    CHECK(misclassification_error(b, a) == doctest::Approx(0.25));
}

TEST_CASE("misclassification error handles unequal group counts") {
    const Partition gs({0, 1, 2, 0, 1, 2}, 3);
    const Partition g({0, 0, 0, 0, 0, 0}, 3);
    CHECK(misclassification_error(g, gs) == doctest::Approx(4.0 / 6.0));
    CHECK_THROWS(misclassification_error(Partition({0}, 1), gs));
}

TEST_CASE("partnership matrix shapes") {
    const auto identity = partnership_matrix(Partition({0, 1, 2}, 3));
    CHECK(identity.isIdentity(0.0));

    const auto ones = partnership_matrix(Partition({0, 0, 0}, 1));
    CHECK(ones.minCoeff() == 1.0);

    const auto mixed = partnership_matrix(Partition({0, 0, 1}, 2));
    CHECK(mixed(0, 1) == 1.0);
    CHECK(mixed(0, 2) == 0.0);
    CHECK(mixed(1, 2) == 0.0);
    CHECK(mixed(2, 2) == 1.0);
}

TEST_CASE("partnership mse") {
    const auto m = partnership_matrix(Partition({0, 1, 0, 1}, 2));
    CHECK(partnership_mse(m, m) == 0.0);

    // the flat estimator against uniform random truths averages 1/K - 1/K^2
    const int n = 24, K = 2, trials = 300;
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(n, n, 1.0 / K);
    flat.diagonal().setOnes();
    double acc = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<int> lab(n);
        for (int i = 0; i < n; ++i) lab[i] = static_cast<int>(rng::bounded(99, t, i, K));
        acc += partnership_mse(flat, partnership_matrix(Partition(lab, K)));
    }
    const double expected = 1.0 / K - 1.0 / (K * K);  // 0.25 at K=2
    CHECK(expected == doctest::Approx(0.25));
    CHECK(acc / trials == doctest::Approx(expected).epsilon(0.05));

    CHECK_THROWS(partnership_mse(flat, Eigen::MatrixXd::Zero(3, 3)));
}

TEST_CASE("normalized partnership is an exact projector") {
    CHECK(normalized_partnership(Partition({0, 1, 2}, 3)).isIdentity(0.0));

    const auto uniform = normalized_partnership(Partition({0, 0, 0, 0}, 1));
    CHECK(uniform.maxCoeff() == doctest::Approx(0.25));

    const Partition pairs({0, 0, 1, 1}, 2);
    const auto b = normalized_partnership_exact(pairs);
    const auto b2 = rational_matmul(b, b);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(b2[i][j] == b[i][j]);
    CHECK(b[0][1] == Rational(1, 2));
    CHECK(b[0][2] == 0);
}

TEST_CASE("l1 discrepancy: the two routes agree") {
    const Partition gs({0, 0, 1, 1}, 2);
    SUBCASE("identical partitions vanish") {
        const auto d = b_l1_discrepancy(gs, gs);
        CHECK(d.entrywise == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(b_l1_discrepancy_exact(gs, gs) == 0);
    }
    SUBCASE("hand-computed 4x4 case") {
        const Partition one({0, 0, 0, 0}, 2);
        const auto d = b_l1_discrepancy(gs, one);
        CHECK(d.entrywise == doctest::Approx(4.0));
        CHECK(d.cross_block == doctest::Approx(4.0));
        CHECK(b_l1_discrepancy_exact(gs, one) == 4);
    }
    SUBCASE("random pairs agree to 1e-10") {
        for (int t = 0; t < 60; ++t) {
            const int n = 5 + static_cast<int>(rng::bounded(7, t, 0, 12));
            const int K = 2 + static_cast<int>(rng::bounded(7, t, 1, 3));
            std::vector<int> la(n), lb(n);
            for (int i = 0; i < n; ++i) {
                la[i] = static_cast<int>(rng::bounded(7, 100 + t, i, K));
                lb[i] = static_cast<int>(rng::bounded(7, 200 + t, i, K));
            }
            const auto d = b_l1_discrepancy(Partition(la, K), Partition(lb, K));
            CHECK(std::abs(d.entrywise - d.cross_block) < 1e-10);
        }
    }
}

TEST_CASE("kmeans criterion") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0, 2;
    CHECK(kmeans_criterion(pts, Partition({0, 1}, 2)) == 0.0);
    CHECK(kmeans_criterion(pts, Partition({0, 0}, 1)) == doctest::Approx(2.0));

    Eigen::MatrixXd data(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) data(i, j) = rng::normal(3, i, j);
    const Partition g({0, 1, 0, 1, 0}, 2);
    const Partition relabeled({1, 0, 1, 0, 1}, 2);
    CHECK(kmeans_criterion(data, g) == doctest::Approx(kmeans_criterion(data, relabeled)));
}

TEST_CASE("error versus partnership estimate") {
    const Partition gs({0, 0, 1, 1}, 2);
    const auto [z1, z2] = err_vs_partnership_check(gs, gs);
    CHECK(z1 == 0.0);
    CHECK(z2 == 0.0);

    const Partition g({0, 0, 0, 1}, 2);
    const auto [lhs, rhs] = err_vs_partnership_check(g, gs);
    CHECK(lhs == doctest::Approx(0.5));
    CHECK(lhs <= rhs + 1e-12);
}
