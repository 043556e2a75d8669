#include <doctest.h>

#include <cmath>
#include <set>

#include "cluslab/lab.hpp"
#include "cluslab/lowdegree.hpp"
#include "cluslab/verify.hpp"

using namespace cluslab;
using namespace cluslab::lab;

namespace {

nlohmann::json base_config_json() {
    return nlohmann::json{{"schema_version", 1},
                          {"n", {12}},
                          {"p", {8}},
                          {"K", {2}},
                          {"delta_bar_sq", {1.0}},
                          {"algorithms", {"lloyd", "single_linkage"}},
                          {"trials", 3},
                          {"sigma", 1.0},
                          {"prior", "bernoulli_hypercube"},
                          {"seed", 404},
                          {"output_path", ""}};
}

}  // namespace

TEST_CASE("config parsing is strict") {
    CHECK_NOTHROW(config_from_json(base_config_json()));

    auto bad_key = base_config_json();
    bad_key["surprise"] = 1;
    CHECK_THROWS(config_from_json(bad_key));

    auto bad_version = base_config_json();
    bad_version["schema_version"] = 2;
    CHECK_THROWS(config_from_json(bad_version));

    auto empty_grid = base_config_json();
    empty_grid["K"] = nlohmann::json::array();
    CHECK_THROWS(config_from_json(empty_grid));

    auto no_trials = base_config_json();
    no_trials["trials"] = 0;
    CHECK_THROWS(config_from_json(no_trials));

    const auto cfg = config_from_json(base_config_json());
    const auto round = config_from_json(config_to_json(cfg));
    CHECK(round.seed == cfg.seed);
    CHECK(round.n == cfg.n);
    CHECK(round.algorithms.size() == cfg.algorithms.size());
}

TEST_CASE("sweep shape, seeds and flags") {
    auto cfg = config_from_json(base_config_json());
    const auto records = run_sweep(cfg);
    CHECK(records.size() == 6);  // 1 cell x 2 algorithms x 3 trials
    std::set<std::uint64_t> seeds;
    for (const auto& r : records) {
        seeds.insert(r.seed);
        CHECK(r.err >= 0.0);
        CHECK(r.err <= 1.0);
        CHECK(r.flags.rfind("regime=", 0) == 0);
    }
    CHECK(seeds.size() == records.size());
}

TEST_CASE("sweeps run under every prior") {
    for (const char* prior : {"bernoulli_hypercube", "gaussian", "fixed_means"}) {
        auto j = base_config_json();
        j["prior"] = prior;
        const auto records = run_sweep(config_from_json(j));
        CHECK(records.size() == 6);
        for (const auto& r : records) CHECK(!r.skipped);
    }
}

TEST_CASE("infeasible exact kmeans cells are skipped with a flag") {
    auto cfg = config_from_json(base_config_json());
    cfg.algorithms = {Algorithm::ExactKMeans};
    cfg.n = {30};
    const auto records = run_sweep(cfg);
    for (const auto& r : records) {
        CHECK(r.skipped);
        CHECK(r.flags.find("skipped") != std::string::npos);
    }
}

TEST_CASE("sweep output is byte-identical across thread counts and reruns") {
    auto j = base_config_json();
    j["n"] = {10, 14};
    j["K"] = {2, 3};
    j["delta_bar_sq"] = {0.0, 4.0};
    j["algorithms"] = {"lloyd", "single_linkage", "spectral"};
    j["trials"] = 2;
    j["D"] = 1;
    const auto cfg = config_from_json(j);
    const auto csv1 = records_to_csv(run_sweep(cfg, 1), true);
    const auto csv3 = records_to_csv(run_sweep(cfg, 3), true);
    const auto again = records_to_csv(run_sweep(cfg, 2), true);
    CHECK(csv1 == csv3);
    CHECK(csv1 == again);
    CHECK(csv1.find(",zeta,mmse_lower") != std::string::npos);
}

TEST_CASE("flat-signal cells sit at chance error") {
    auto j = base_config_json();
    j["n"] = {100};
    j["p"] = {16};
    j["delta_bar_sq"] = {0.0};
    j["algorithms"] = {"lloyd"};
    j["trials"] = 8;
    const auto records = run_sweep(config_from_json(j));
    double acc = 0;
    for (const auto& r : records) acc += r.err;
    const double mean_err = acc / records.size();
    CHECK(std::abs(mean_err - 0.5) < 0.12);
}

TEST_CASE("record CSV round-trips") {
    auto cfg = config_from_json(base_config_json());
    cfg.D = 2;
    const auto records = run_sweep(cfg);
    const auto csv = records_to_csv(records, true);
    const auto parsed = records_from_csv(csv);
    CHECK(records_to_csv(parsed, true) == csv);

    const auto plain_csv = records_to_csv(records, false);
    const auto plain = records_from_csv(plain_csv);
    CHECK(records_to_csv(plain, false) == plain_csv);
}

TEST_CASE("regime labels at hand-placed grid points") {
    // n=100, p=10000, K=2: easy threshold min(sqrt(400), sqrt(10000 ln 100)) = 20,
    // impossible threshold max(sqrt(10000*2*ln2/100), ln 2) ~ 11.77
    CHECK(regime_label(100, 10000, 2, 25.0) == "easy");
    CHECK(regime_label(100, 10000, 2, 15.0) == "hard");
    CHECK(regime_label(100, 10000, 2, 5.0) == "impossible");
    CHECK(regime_label(100, 10000, 2, 20.0) == "easy");  // boundary belongs to easy
}

TEST_CASE("per-trial seeds differ across the grid") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t c = 0; c < 3; ++c)
        for (std::uint64_t a = 0; a < 3; ++a)
            for (std::uint64_t t = 0; t < 3; ++t) seen.insert(derive_seed(5, c, a, t));
    CHECK(seen.size() == 27);
}

TEST_CASE("recovery curve hits both ends and stays monotone") {
    const std::vector<double> grid{0.0, 8.0, 60.0};
    const auto points =
        recovery_curve(24, 96, 2, grid, Algorithm::SingleLinkage, 30, 99, 1);
    CHECK(points.front().exact_recovery_rate <= 0.05);
    CHECK(points.back().exact_recovery_rate >= 0.9);
    std::vector<double> rates;
    for (const auto& pt : points) rates.push_back(pt.exact_recovery_rate);
    const auto fit = isotonic_fit(rates);
    for (std::size_t i = 0; i < rates.size(); ++i) CHECK(std::abs(fit[i] - rates[i]) < 0.05);

    const auto csv = recovery_to_csv(points);
    CHECK(csv.rfind("delta,exact_recovery_rate", 0) == 0);
}

TEST_CASE("isotonic fit") {
    CHECK(isotonic_fit({1, 2, 3}) == std::vector<double>{1, 2, 3});
    const auto pooled = isotonic_fit({3, 1, 2});
    CHECK(pooled == std::vector<double>{2, 2, 2});
    const auto halves = isotonic_fit({0.2, 0.1});
    CHECK(halves[0] == doctest::Approx(0.15));
    CHECK(halves[1] == doctest::Approx(0.15));
}

TEST_CASE("verify suites pass on a clean build") {
    for (const char* suite : {"metrics", "cluster", "lowdegree"}) {
        const auto results = verify::verify_suite(suite, 1);
        CHECK(!results.empty());
        CHECK(verify::all_passed(results));
    }
    CHECK_THROWS(verify::verify_suite("nonsense", 1));
}

TEST_CASE("low-degree report bundles the comparisons") {
    SUBCASE("degree zero: all three agree at the trivial error") {
        const auto doc = lowdegree_report(2, 2, 2, 0.3, 0, 4000, 5);
        const double trivial = doc["trivial_mse"].get<double>();
        CHECK(trivial == doctest::Approx(0.25));
        CHECK(doc["bound"]["mmse_lower"].get<double>() == doctest::Approx(trivial));
        const double est = doc["empirical_mmse"]["estimate"].get<double>();
        const double se = doc["empirical_mmse"]["stderr"].get<double>();
        CHECK(std::abs(est - trivial) < 4 * se + 0.01);
    }
    SUBCASE("no signal: lower bound equals the trivial error exactly") {
        const auto doc = lowdegree_report(3, 3, 2, 0.0, 2, 4000, 6);
        CHECK(doc["bound"]["mmse_lower"].get<double>() ==
              doctest::Approx(doc["trivial_mse"].get<double>()));
        CHECK(doc.contains("corr_bound_sum"));
    }
}
