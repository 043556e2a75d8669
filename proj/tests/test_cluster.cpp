#include <doctest.h>

#include <cmath>

#include "cluslab/cluster.hpp"
#include "cluslab/metrics.hpp"
#include "cluslab/model.hpp"
#include "cluslab/rng.hpp"

using namespace cluslab;

namespace {

Eigen::MatrixXd four_point_line() {
    Eigen::MatrixXd d(4, 1);
    d << 0, 0.1, 10, 10.1;
    return d;
}

}  // namespace

TEST_CASE("exact kmeans on the four-point oracle") {
    const auto res = exact_kmeans(four_point_line(), 2);
    CHECK(res.optimal);
    CHECK(same_partition(res.partition, Partition({0, 0, 1, 1}, 2)));
}

TEST_CASE("exact kmeans degenerate K") {
    const auto d = four_point_line();
    SUBCASE("K = n gives singletons at zero cost") {
        const auto res = exact_kmeans(d, 4);
        CHECK(res.criterion == doctest::Approx(0.0));
        CHECK(res.partition.nonempty_groups() == 4);
    }
    SUBCASE("K = 1 equals the total-variance identity") {
        const auto res = exact_kmeans(d, 1);
        const Eigen::RowVectorXd mean = d.colwise().mean();
        double total = 0;
        for (int i = 0; i < 4; ++i) total += (d.row(i) - mean).squaredNorm();
        CHECK(res.criterion == doctest::Approx(total));
    }
}

TEST_CASE("exact kmeans respects the exhaustive size cap") {
    Eigen::MatrixXd big(20, 1);
    for (int i = 0; i < 20; ++i) big(i, 0) = i;
    CHECK_THROWS(exact_kmeans(big, 2));
    // with a budget it runs and may give up with best-so-far
    const auto res = exact_kmeans(big, 2, std::chrono::milliseconds(50));
    CHECK(res.partition.n() == 20);
}

TEST_CASE("exact kmeans flags budget exhaustion") {
    Eigen::MatrixXd big(26, 2);
    for (int i = 0; i < 26; ++i) {
        big(i, 0) = i * 0.37;
        big(i, 1) = (i * i) % 7;
    }
    const auto res = exact_kmeans(big, 3, std::chrono::milliseconds(1));
    CHECK_FALSE(res.optimal);
    CHECK(res.partition.n() == 26);
    CHECK(res.criterion >= 0.0);
}

TEST_CASE("lloyd agrees with exact search when clusters are obvious") {
    const auto d = four_point_line();
    const auto heur = lloyd(d, 2, 4, 50, 11);
    const auto exact = exact_kmeans(d, 2);
    CHECK(same_partition(heur.partition, exact.partition));
    CHECK(heur.criterion == doctest::Approx(exact.criterion));
}

TEST_CASE("lloyd descends and never beats exact search") {
    for (int t = 0; t < 10; ++t) {
        Eigen::MatrixXd d(9, 2);
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 2; ++j) d(i, j) = rng::normal(55, 10 * t + i, j);
        const auto heur = lloyd(d, 3, 3, 60, rng::word(56, t, 0));
        for (std::size_t h = 1; h < heur.criterion_history.size(); ++h)
            CHECK(heur.criterion_history[h] <=
                  heur.criterion_history[h - 1] * (1 + 1e-9) + 1e-12);
        const auto exact = exact_kmeans(d, 3);
        CHECK(heur.criterion >= exact.criterion - 1e-9 * (1 + exact.criterion));
    }
}

TEST_CASE("single linkage merge traces") {
    SUBCASE("K = n keeps singletons") {
        const auto d = four_point_line();
        const auto part = single_linkage(d, 4);
        CHECK(part.nonempty_groups() == 4);
    }
    SUBCASE("two tight pairs far apart") {
        const auto part = single_linkage(four_point_line(), 2);
        CHECK(same_partition(part, Partition({0, 0, 1, 1}, 2)));
    }
    SUBCASE("line 0,1,3 splits after the short merge") {
        Eigen::MatrixXd d(3, 1);
        d << 0, 1, 3;
        CHECK(same_partition(single_linkage(d, 2), Partition({0, 0, 1}, 2)));
    }
    SUBCASE("K > n throws") {
        CHECK_THROWS(single_linkage(four_point_line(), 5));
    }
}

TEST_CASE("spectral clustering") {
    SUBCASE("duplicated well-separated points recover exactly") {
        Eigen::MatrixXd d(9, 2);
        for (int i = 0; i < 9; ++i) {
            const int k = i / 3;
            d(i, 0) = 100.0 * k;
            d(i, 1) = 50.0 * (k == 2);
        }
        std::vector<int> truth{0, 0, 0, 1, 1, 1, 2, 2, 2};
        const auto part = spectral_cluster(d, 3, 5);
        CHECK(misclassification_error(part, Partition(truth, 3)) == 0.0);
    }
    SUBCASE("agreement with exact kmeans on the near-line oracle") {
        Eigen::MatrixXd d(4, 2);
        d << 0, 0, 0.1, 0.1, 10, 0, 10.1, 0.1;
        const auto embedded = spectral_cluster(d, 2, 3);
        const auto exact = exact_kmeans(d, 2);
        CHECK(same_partition(embedded, exact.partition));
    }
    SUBCASE("no signal lands near chance error") {
        const int trials = 30, n = 200;
        double acc = 0;
        for (int t = 0; t < trials; ++t) {
            const auto inst = sample_bernoulli_prior(n, 32, 2, 0.0, 1.0, rng::word(60, t, 0));
            acc += misclassification_error(spectral_cluster(inst.data, 2, rng::word(61, t, 0)),
                                           inst.labels);
        }
        const double mean_err = acc / trials;
        CHECK(mean_err > 0.38);
        CHECK(mean_err <= 0.5 + 1e-12);
    }
}

TEST_CASE("all clusterers emit canonical labels") {
    Eigen::MatrixXd d(8, 2);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 2; ++j) d(i, j) = rng::normal(77, i, j);
    for (const Partition& out : {exact_kmeans(d, 3).partition, single_linkage(d, 3),
                                 lloyd(d, 3, 2, 50, 5).partition, spectral_cluster(d, 3, 5)}) {
        CHECK(out.labels == out.canonical().labels);
    }
}
