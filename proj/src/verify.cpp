#include "cluslab/verify.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "cluslab/cluster.hpp"
#include "cluslab/metrics.hpp"
#include "cluslab/model.hpp"
#include "cluslab/partition.hpp"
#include "cluslab/rng.hpp"

namespace cluslab::verify {

namespace {

Partition random_partition(int n, int K, std::uint64_t seed, std::uint64_t stream) {
    std::vector<int> lab(n);
    for (int i = 0; i < n; ++i)
        lab[i] = static_cast<int>(rng::bounded(seed, stream, i, K));
    return Partition(std::move(lab), K);
}

// every group size in [floor(n/K), ceil(n/K)], then shuffled deterministically
Partition random_balanced_partition(int n, int K, std::uint64_t seed, std::uint64_t stream) {
    std::vector<int> lab(n);
    for (int i = 0; i < n; ++i) lab[i] = i % K;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng::bounded(seed, stream, i, i + 1));
        std::swap(lab[i], lab[j]);
    }
    return Partition(std::move(lab), K);
}

double brute_force_err(const Partition& g, const Partition& g_star) {
    const int S = std::max(g.K, g_star.K);
    std::vector<int> perm(S);
    for (int k = 0; k < S; ++k) perm[k] = k;
    const int n = g.n();
    double best = std::numeric_limits<double>::infinity();
    do {
        int sym_diff = 0;
        for (int k = 0; k < S; ++k) {
            int inter = 0, size_star = 0, size_g = 0;
            for (int i = 0; i < n; ++i) {
                const bool in_star = g_star.labels[i] == k;
                const bool in_g = g.labels[i] == perm[k];
                size_star += in_star;
                size_g += in_g;
                inter += in_star && in_g;
            }
            sym_diff += size_star + size_g - 2 * inter;
        }
        best = std::min(best, sym_diff / (2.0 * n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::string describe(const Partition& a) {
    std::ostringstream out;
    for (int v : a.labels) out << v;
    return out.str();
}

}  // namespace

std::vector<CheckResult> verify_metrics(std::uint64_t seed) {
    std::vector<CheckResult> results;

    {
        CheckResult check{"metrics.err_pseudometric", true, ""};
        for (int t = 0; t < 200 && check.passed; ++t) {
            const int n = 3 + static_cast<int>(rng::bounded(seed, 100 + t, 0, 10));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 100 + t, 1, 3));
            const auto a = random_partition(n, K, seed, 1000 + 3 * t);
            const auto b = random_partition(n, K, seed, 1001 + 3 * t);
            const auto c = random_partition(n, K, seed, 1002 + 3 * t);
            const double ab = misclassification_error(a, b);
            const double ba = misclassification_error(b, a);
            const double ac = misclassification_error(a, c);
            const double cb = misclassification_error(c, b);
            if (misclassification_error(a, a) != 0.0 || std::abs(ab - ba) > 1e-12 ||
                ab > ac + cb + 1e-12 || ab < 0 || ab > 1) {
                check.passed = false;
                check.detail = "a=" + describe(a) + " b=" + describe(b) + " c=" + describe(c);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"metrics.err_label_permutation_invariance", true, ""};
        for (int t = 0; t < 100 && check.passed; ++t) {
            const int n = 4 + static_cast<int>(rng::bounded(seed, 200 + t, 0, 12));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 200 + t, 1, 3));
            const auto a = random_partition(n, K, seed, 2000 + 2 * t);
            const auto b = random_partition(n, K, seed, 2001 + 2 * t);
            std::vector<int> perm(K);
            for (int k = 0; k < K; ++k) perm[k] = (k + 1) % K;
            std::vector<int> relabeled(n);
            for (int i = 0; i < n; ++i) relabeled[i] = perm[b.labels[i]];
            const double before = misclassification_error(b, a);
            const double after = misclassification_error(Partition(relabeled, K), a);
            if (std::abs(before - after) > 1e-12) {
                check.passed = false;
                check.detail = "a=" + describe(a) + " b=" + describe(b);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"metrics.hungarian_vs_brute_force", true, ""};
        for (int t = 0; t < 200 && check.passed; ++t) {
            const int n = 4 + static_cast<int>(rng::bounded(seed, 300 + t, 0, 20));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 300 + t, 1, 4));
            const auto a = random_partition(n, K, seed, 3000 + 2 * t);
            const auto b = random_partition(n, K, seed, 3001 + 2 * t);
            const double fast = misclassification_error(a, b);
            const double slow = brute_force_err(a, b);
            if (std::abs(fast - slow) > 1e-12) {
                check.passed = false;
                check.detail = "a=" + describe(a) + " b=" + describe(b) +
                               " hungarian=" + std::to_string(fast) +
                               " brute=" + std::to_string(slow);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"metrics.normalized_partnership_projector", true, ""};
        for (int t = 0; t < 50 && check.passed; ++t) {
            const int n = 3 + static_cast<int>(rng::bounded(seed, 400 + t, 0, 8));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 400 + t, 1, 3));
            const auto g = random_balanced_partition(n, K, seed, 4000 + t);
            const auto b = normalized_partnership_exact(g);
            const auto b2 = rational_matmul(b, b);
            Rational trace = 0;
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) {
                Rational row_sum = 0;
                for (int j = 0; j < n && ok; ++j) {
                    if (b[i][j] < 0) ok = false;
                    if (b2[i][j] != b[i][j]) ok = false;
                    row_sum += b[i][j];
                }
                if (row_sum != 1) ok = false;
                trace += b[i][i];
            }
            if (trace != g.nonempty_groups()) ok = false;
            if (!ok) {
                check.passed = false;
                check.detail = "g=" + describe(g);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"metrics.b_l1_two_routes_agree", true, ""};
        for (int t = 0; t < 100 && check.passed; ++t) {
            const int n = 4 + static_cast<int>(rng::bounded(seed, 500 + t, 0, 16));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 500 + t, 1, 3));
            const auto gs = random_balanced_partition(n, K, seed, 5000 + 2 * t);
            const auto g = random_balanced_partition(n, K, seed, 5001 + 2 * t);
            const auto d = b_l1_discrepancy(gs, g);
            if (std::abs(d.entrywise - d.cross_block) > 1e-10) {
                check.passed = false;
                check.detail = "gs=" + describe(gs) + " g=" + describe(g) + " entrywise=" +
                               std::to_string(d.entrywise) +
                               " cross=" + std::to_string(d.cross_block);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"metrics.err_vs_partnership_inequality", true, ""};
        for (int t = 0; t < 300 && check.passed; ++t) {
            const int n = 4 + static_cast<int>(rng::bounded(seed, 600 + t, 0, 20));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 600 + t, 1, 4));
            const auto g = random_partition(n, K, seed, 6000 + 2 * t);
            const auto gs = random_partition(n, K, seed, 6001 + 2 * t);
            const auto [lhs, rhs] = err_vs_partnership_check(g, gs);
            if (lhs > rhs + 1e-12) {
                check.passed = false;
                check.detail = "g=" + describe(g) + " gs=" + describe(gs);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"metrics.partition_recovery_l1_bound", true, ""};
        for (int t = 0; t < 200 && check.passed; ++t) {
            const int n = 6 + static_cast<int>(rng::bounded(seed, 700 + t, 0, 18));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 700 + t, 1, 3));
            const auto gs = random_balanced_partition(n, K, seed, 7000 + 2 * t);
            const auto g = random_balanced_partition(n, K, seed, 7001 + 2 * t);
            const double err = misclassification_error(g, gs);
            const auto bal = balancedness(gs);
            const Rational delta = b_l1_discrepancy_exact(gs, g);
            const Rational bound = Rational(2 * bal.m_plus, bal.m) * delta / n;
            if (Rational(static_cast<long long>(std::llround(err * 2 * n)), 2 * n) > bound) {
                check.passed = false;
                check.detail = "gs=" + describe(gs) + " g=" + describe(g) +
                               " err=" + std::to_string(err);
            }
        }
        results.push_back(check);
    }

    return results;
}

std::vector<CheckResult> verify_cluster(std::uint64_t seed) {
    std::vector<CheckResult> results;

    auto random_data = [&](int n, int p, std::uint64_t stream) {
        Eigen::MatrixXd d(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) d(i, j) = rng::normal(seed, stream * 131 + i, j);
        return d;
    };

    {
        CheckResult check{"cluster.exact_kmeans_vs_enumeration", true, ""};
        for (int t = 0; t < 40 && check.passed; ++t) {
            const int n = 4 + static_cast<int>(rng::bounded(seed, 800 + t, 0, 5));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 800 + t, 1, 2));
            const Eigen::MatrixXd data = random_data(n, 2, 9000 + t);
            const auto fast = exact_kmeans(data, K);
            double best = std::numeric_limits<double>::infinity();
            for_each_set_partition(n, K, [&](const std::vector<int>& rgs) {
                best = std::min(best, kmeans_criterion(data, Partition(rgs, K)));
            });
            if (std::abs(fast.criterion - best) > 1e-9 * (1 + best)) {
                check.passed = false;
                check.detail = "n=" + std::to_string(n) + " K=" + std::to_string(K) +
                               " bnb=" + std::to_string(fast.criterion) +
                               " enum=" + std::to_string(best);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"cluster.lloyd_descends_and_dominated", true, ""};
        for (int t = 0; t < 25 && check.passed; ++t) {
            const int n = 6 + static_cast<int>(rng::bounded(seed, 900 + t, 0, 4));
            const int K = 2;
            const Eigen::MatrixXd data = random_data(n, 2, 9500 + t);
            const auto heur = lloyd(data, K, 4, 60, rng::word(seed, 950, t));
            for (std::size_t h = 1; h < heur.criterion_history.size(); ++h)
                if (heur.criterion_history[h] >
                    heur.criterion_history[h - 1] * (1 + 1e-9)) {
                    check.passed = false;
                    check.detail = "criterion increased at iteration " + std::to_string(h);
                }
            const auto exact = exact_kmeans(data, K);
            if (heur.criterion < exact.criterion - 1e-9 * (1 + exact.criterion)) {
                check.passed = false;
                check.detail = "lloyd beat exact search: " + std::to_string(heur.criterion) +
                               " < " + std::to_string(exact.criterion);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"cluster.single_linkage_row_permutation_invariance", true, ""};
        for (int t = 0; t < 25 && check.passed; ++t) {
            const int n = 8 + static_cast<int>(rng::bounded(seed, 1000 + t, 0, 6));
            const int K = 2 + static_cast<int>(rng::bounded(seed, 1000 + t, 1, 2));
            const Eigen::MatrixXd data = random_data(n, 3, 10000 + t);
            std::vector<int> perm(n);
            for (int i = 0; i < n; ++i) perm[i] = i;
            for (int i = n - 1; i > 0; --i)
                std::swap(perm[i],
                          perm[static_cast<int>(rng::bounded(seed, 1100 + t, i, i + 1))]);
            Eigen::MatrixXd permuted(n, data.cols());
            for (int i = 0; i < n; ++i) permuted.row(i) = data.row(perm[i]);
            const Partition direct = single_linkage(data, K);
            const Partition from_permuted = single_linkage(permuted, K);
            std::vector<int> unpermuted(n);
            for (int i = 0; i < n; ++i) unpermuted[perm[i]] = from_permuted.labels[i];
            if (!same_partition(direct, Partition(unpermuted, K))) {
                check.passed = false;
                check.detail = "n=" + std::to_string(n) + " K=" + std::to_string(K);
            }
        }
        results.push_back(check);
    }

    {
        CheckResult check{"cluster.outputs_label_canonical", true, ""};
        for (int t = 0; t < 20 && check.passed; ++t) {
            const int n = 6 + static_cast<int>(rng::bounded(seed, 1200 + t, 0, 4));
            const Eigen::MatrixXd data = random_data(n, 2, 12000 + t);
            for (const Partition& out :
                 {exact_kmeans(data, 3).partition, single_linkage(data, 3),
                  lloyd(data, 3, 2, 40, rng::word(seed, 1201, t)).partition,
                  spectral_cluster(data, 3, rng::word(seed, 1202, t))}) {
                if (out.labels != out.canonical().labels) {
                    check.passed = false;
                    check.detail = "non-canonical output " + describe(out);
                }
            }
        }
        results.push_back(check);
    }

    {
        // qualitative separation monotonicity at desk scale
        CheckResult check{"cluster.exact_kmeans_err_monotone_in_separation", true, ""};
        const std::vector<double> grid{0.0, 2.0, 8.0, 32.0};
        const int trials = 24, n = 12, p = 24, K = 2;
        std::vector<double> mean_err;
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            double acc = 0;
            for (int t = 0; t < trials; ++t) {
                const auto inst = sample_bernoulli_prior(
                    n, p, K, grid[gi], 1.0, rng::word(seed, 1300 + gi, t));
                acc += misclassification_error(exact_kmeans(inst.data, K).partition,
                                               inst.labels);
            }
            mean_err.push_back(acc / trials);
        }
        for (std::size_t gi = 1; gi < mean_err.size(); ++gi)
            if (mean_err[gi] > mean_err[gi - 1] + 0.12) {  // Monte Carlo slack
                check.passed = false;
                std::ostringstream out;
                for (double e : mean_err) out << e << ' ';
                check.detail = "mean err sequence: " + out.str();
            }
        results.push_back(check);
    }

    return results;
}

CheckResult check_parity_against_mc(const ParityFn& parity, std::uint64_t seed, int cases,
                                    int samples) {
    CheckResult check{"lowdegree.parity_probability_vs_mc", true, ""};
    for (int t = 0; t < cases && check.passed; ++t) {
        const int K = 2 + static_cast<int>(rng::bounded(seed, 1400 + t, 0, 2));
        std::map<std::pair<int, int>, int> cells;
        const int m = 1 + static_cast<int>(rng::bounded(seed, 1400 + t, 1, 3));
        const int r = 1 + static_cast<int>(rng::bounded(seed, 1400 + t, 2, 2));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < r; ++j) {
                const int mult = static_cast<int>(rng::bounded(seed, 1500 + t, i * r + j, 3));
                if (mult > 0) cells[{i, j}] = mult;
            }
        if (cells.empty()) cells[{0, 0}] = 2;
        const auto gamma = lowdegree::AlphaMatrix::make(m, r, cells);
        const auto mc = lowdegree::mc_moment(gamma, K, 1.0, samples, rng::word(seed, 1600, t));
        const double exact = static_cast<double>(parity(gamma, K));
        const double tol = 5 * mc.stderr_ + 1e-9;
        if (std::abs(mc.estimate - exact) > tol) {
            check.passed = false;
            check.detail = "gamma=" + gamma.encode() + " K=" + std::to_string(K) +
                           " parity=" + std::to_string(exact) +
                           " mc=" + std::to_string(mc.estimate) +
                           " stderr=" + std::to_string(mc.stderr_);
        }
    }
    return check;
}

std::vector<CheckResult> verify_lowdegree(std::uint64_t seed) {
    using lowdegree::AlphaMatrix;
    std::vector<CheckResult> results;

    {
        CheckResult check{"lowdegree.filter_matches_unshortcut_recursion", true, ""};
        // all alpha on a 2 x 2 support with |alpha| <= 3
        lowdegree::CumulantTable plain(2, /*use_filter=*/false);
        std::vector<std::array<int, 3>> entries;
        auto rec = [&](auto&& self, int cell, int remaining) -> void {
            if (!check.passed) return;
            if (cell == 4) {
                if (entries.empty()) return;
                AlphaMatrix a;
                a.n = 2;
                a.p = 2;
                a.entries = entries;
                const bool may_be_nonzero = lowdegree::null_cumulant_filter(a);
                const auto kappa = plain.cumulant(a);
                if (!may_be_nonzero && kappa.coeff != 0) {
                    check.passed = false;
                    check.detail = "alpha=" + a.encode();
                }
                return;
            }
            self(self, cell + 1, remaining);
            for (int mult = 1; mult <= remaining; ++mult) {
                entries.push_back({cell / 2, cell % 2, mult});
                self(self, cell + 1, remaining - mult);
                entries.pop_back();
            }
        };
        rec(rec, 0, 3);
        results.push_back(check);
    }

    {
        CheckResult check{"lowdegree.moment_and_cumulant_bounds_small", true, ""};
        for (int K : {2, 3}) {
            lowdegree::CumulantTable table(K);
            std::vector<std::array<int, 3>> entries;
            auto rec = [&](auto&& self, int cell, int remaining) -> void {
                if (!check.passed) return;
                if (cell == 6) {
                    if (entries.empty()) return;
                    AlphaMatrix a;
                    a.n = 3;
                    a.p = 2;
                    a.entries = entries;
                    const auto g = lowdegree::graph_stats(a);
                    const Rational prob = lowdegree::parity_probability(a, K);
                    // prob^2 * K^(2l - d - 2cc) <= d^(2d), exactly
                    const int expo = 2 * g.l - g.edges - 2 * g.cc;
                    Rational lhs = prob * prob;
                    if (expo >= 0)
                        lhs *= Rational(int_pow(K, expo));
                    else
                        lhs /= Rational(int_pow(K, -expo));
                    const Rational rhs =
                        Rational(int_pow(BigInt(g.edges), 2 * static_cast<unsigned>(g.edges)));
                    if (prob != 0 && lhs > rhs) {
                        check.passed = false;
                        check.detail = "moment bound violated at alpha=" + a.encode() +
                                       " K=" + std::to_string(K);
                    }
                    const Rational q = table.cumulant(a).coeff;
                    if (q != 0) {
                        const Rational q2 = q * q;
                        const unsigned d = static_cast<unsigned>(g.edges);
                        const Rational cap1 =
                            Rational(int_pow(BigInt(1 + g.edges), 2 * d), BigInt(K) * K);
                        const int expo2 = 2 * g.l - g.edges - 2;
                        Rational cap2 = Rational(int_pow(BigInt(1 + g.edges), 2 * d) *
                                                 int_pow(BigInt(g.edges), 2 * d));
                        if (expo2 >= 0)
                            cap2 /= Rational(int_pow(K, expo2));
                        else
                            cap2 *= Rational(int_pow(K, -expo2));
                        if (q2 > cap1 || q2 > cap2) {
                            check.passed = false;
                            check.detail = "cumulant bound violated at alpha=" + a.encode() +
                                           " K=" + std::to_string(K);
                        }
                    }
                    return;
                }
                self(self, cell + 1, remaining);
                for (int mult = 1; mult <= remaining; ++mult) {
                    entries.push_back({cell / 2, cell % 2, mult});
                    self(self, cell + 1, remaining - mult);
                    entries.pop_back();
                }
            };
            rec(rec, 0, 4);
        }
        results.push_back(check);
    }

    {
        CheckResult check{"lowdegree.numbergroups_bound_small", true, ""};
        std::vector<std::array<int, 3>> entries;
        auto rec = [&](auto&& self, int cell, int remaining) -> void {
            if (!check.passed) return;
            if (cell == 8) {
                if (entries.empty()) return;
                AlphaMatrix a;
                a.n = 4;
                a.p = 2;
                a.entries = entries;
                if (!lowdegree::numbergroups_check(a)) {
                    check.passed = false;
                    check.detail = "gamma=" + a.encode();
                }
                return;
            }
            self(self, cell + 1, remaining);
            for (int mult = 1; mult <= remaining; ++mult) {
                entries.push_back({cell / 2, cell % 2, mult});
                self(self, cell + 1, remaining - mult);
                entries.pop_back();
            }
        };
        rec(rec, 0, 5);
        results.push_back(check);
    }

    {
        CheckResult check{"lowdegree.cumulant_homogeneity_degree", true, ""};
        lowdegree::CumulantTable table(3);
        const auto a = AlphaMatrix::make(3, 2, {{{0, 0}, 1}, {{1, 0}, 2}, {{1, 1}, 1}, {{2, 1}, 2}});
        const auto kappa = table.cumulant(a);
        if (kappa.eps_degree != a.total()) {
            check.passed = false;
            check.detail = "degree " + std::to_string(kappa.eps_degree) + " expected " +
                           std::to_string(a.total());
        }
        results.push_back(check);
    }

    results.push_back(check_parity_against_mc(
        [](const lowdegree::AlphaMatrix& g, int K) { return lowdegree::parity_probability(g, K); },
        seed));

    {
        CheckResult check{"lowdegree.corr_sum_below_closed_form", true, ""};
        // zeta = (dbsq)^2 * D^8 (1+D)^4 / p * max(n/K^2, 1); here exactly rational
        const int n = 2, p = 2, K = 2, D = 2;
        const Rational dbsq(1, 150);
        const Rational eps_sq = dbsq / p;
        const Rational zeta = dbsq * dbsq * 20736 / p;  // n <= K^2
        const Rational sum = lowdegree::corr_bound_sum(n, p, D, K, eps_sq);
        // L <= (1/K^2)(1 + z/(1-sqrt z)^3), reduced to rational comparisons
        const Rational A = sum * K * K - 1;
        bool holds = A <= 0;
        if (!holds) {
            const Rational C = A * (1 + 3 * zeta) - zeta;
            const Rational E = A * (3 + zeta);
            holds = C <= 0 || C * C <= zeta * E * E;
        }
        if (!holds) {
            check.passed = false;
            std::ostringstream out;
            out << "sum=" << sum << " zeta=" << zeta;
            check.detail = out.str();
        }
        results.push_back(check);
    }

    return results;
}

std::vector<CheckResult> verify_all(std::uint64_t seed) {
    auto all = verify_metrics(seed);
    for (auto& c : verify_cluster(seed)) all.push_back(std::move(c));
    for (auto& c : verify_lowdegree(seed)) all.push_back(std::move(c));
    return all;
}

std::vector<CheckResult> verify_suite(const std::string& suite, std::uint64_t seed) {
    if (suite == "metrics") return verify_metrics(seed);
    if (suite == "cluster") return verify_cluster(seed);
    if (suite == "lowdegree") return verify_lowdegree(seed);
    if (suite == "all") return verify_all(seed);
    throw std::invalid_argument("unknown verify suite: " + suite);
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

}  // namespace cluslab::verify
