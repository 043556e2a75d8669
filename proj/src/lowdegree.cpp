#include "cluslab/lowdegree.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cluslab/partition.hpp"
#include "cluslab/rng.hpp"

namespace cluslab::lowdegree {

AlphaMatrix AlphaMatrix::make(int n, int p, const std::map<std::pair<int, int>, int>& cells) {
    AlphaMatrix a;
    a.n = n;
    a.p = p;
    a.entries.reserve(cells.size());
    for (const auto& [cell, mult] : cells) {
        const auto [i, j] = cell;
        if (i < 0 || i >= n || j < 0 || j >= p)
            throw std::invalid_argument("AlphaMatrix: cell out of bounds");
        if (mult <= 0) throw std::invalid_argument("AlphaMatrix: multiplicity must be positive");
        a.entries.push_back({i, j, mult});
    }
    return a;
}

int AlphaMatrix::total() const {
    int t = 0;
    for (const auto& e : entries) t += e[2];
    return t;
}

std::string AlphaMatrix::encode() const {
    std::string s;
    for (const auto& e : entries) {
        if (!s.empty()) s += ';';
        s += std::to_string(e[0]);
        s += ':';
        s += std::to_string(e[1]);
        s += ':';
        s += std::to_string(e[2]);
    }
    return s;
}

namespace {

struct Support {
    std::vector<int> rows;  // sorted distinct support rows
    std::vector<int> cols;  // sorted distinct support columns
    // per support row, bitmask over support columns of odd multiplicities
    std::vector<std::uint64_t> odd_masks;
    // per support row/column position, list of (other position, multiplicity)
    std::vector<std::vector<std::pair<int, int>>> row_cells;  // (col position, mult)
};

Support support_of(const AlphaMatrix& a) {
    Support s;
    for (const auto& e : a.entries) {
        s.rows.push_back(e[0]);
        s.cols.push_back(e[1]);
    }
    auto uniq = [](std::vector<int>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(s.rows);
    uniq(s.cols);
    if (s.cols.size() > 64)
        throw std::invalid_argument("lowdegree: more than 64 support columns unsupported");
    auto row_pos = [&](int i) {
        return static_cast<int>(std::lower_bound(s.rows.begin(), s.rows.end(), i) - s.rows.begin());
    };
    auto col_pos = [&](int j) {
        return static_cast<int>(std::lower_bound(s.cols.begin(), s.cols.end(), j) - s.cols.begin());
    };
    s.odd_masks.assign(s.rows.size(), 0);
    s.row_cells.assign(s.rows.size(), {});
    for (const auto& e : a.entries) {
        const int rp = row_pos(e[0]);
        const int cp = col_pos(e[1]);
        if (e[2] % 2 != 0) s.odd_masks[rp] ^= std::uint64_t(1) << cp;
        s.row_cells[rp].push_back({cp, e[2]});
    }
    return s;
}

}  // namespace

GraphStats graph_stats(const AlphaMatrix& alpha) {
    GraphStats g;
    if (alpha.entries.empty()) return g;
    const Support s = support_of(alpha);
    g.m = static_cast<int>(s.rows.size());
    g.r = static_cast<int>(s.cols.size());
    g.edges = alpha.total();
    g.l = g.m + g.r;

    // union-find over support nodes: row positions, then column positions
    std::vector<int> parent(g.l);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    auto row_pos = [&](int i) {
        return static_cast<int>(std::lower_bound(s.rows.begin(), s.rows.end(), i) - s.rows.begin());
    };
    auto col_pos = [&](int j) {
        return g.m + static_cast<int>(std::lower_bound(s.cols.begin(), s.cols.end(), j) -
                                      s.cols.begin());
    };
    for (const auto& e : alpha.entries) {
        const int a = find(row_pos(e[0]));
        const int b = find(col_pos(e[1]));
        if (a != b) parent[a] = b;
    }
    for (int x = 0; x < g.l; ++x)
        if (find(x) == x) ++g.cc;
    g.connected = g.cc == 1;

    g.has_rows_1_2 = std::binary_search(s.rows.begin(), s.rows.end(), 0) &&
                     std::binary_search(s.rows.begin(), s.rows.end(), 1);

    std::vector<std::vector<int>> col_rows(g.r);
    for (const auto& e : alpha.entries) col_rows[col_pos(e[1]) - g.m].push_back(e[0]);
    g.min_col_distinct_degree = g.r ? std::numeric_limits<int>::max() : 0;
    for (auto& rows : col_rows) {
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        g.min_col_distinct_degree =
            std::min(g.min_col_distinct_degree, static_cast<int>(rows.size()));
    }
    return g;
}

bool null_cumulant_filter(const AlphaMatrix& alpha) {
    if (alpha.entries.empty())
        throw std::invalid_argument("null_cumulant_filter: zero matrix is handled separately");
    const GraphStats g = graph_stats(alpha);
    return g.connected && g.has_rows_1_2 && g.min_col_distinct_degree >= 2;
}

namespace {

// Counts assignments of `rows` labels in [0, K) such that the per-group xor
// of odd-masks vanishes; optionally also requires labels at two positions to
// match. Plain odometer enumeration, cost K^rows.
struct ParityCount {
    BigInt satisfying = 0;
    BigInt satisfying_and_pair = 0;
};

ParityCount count_parity(const std::vector<std::uint64_t>& masks, int K, int pair_a = -1,
                         int pair_b = -1) {
    const int m = static_cast<int>(masks.size());
    ParityCount out;
    if (m == 0) {
        out.satisfying = 1;
        out.satisfying_and_pair = 1;
        return out;
    }
    std::vector<int> label(m, 0);
    std::vector<std::uint64_t> acc(K, 0);
    acc[0] = 0;
    for (int t = 0; t < m; ++t) acc[0] ^= masks[t];
    int nonzero = acc[0] != 0 ? 1 : 0;
    auto move_row = [&](int t, int from, int to) {
        const std::uint64_t mk = masks[t];
        if (mk == 0) return;
        const bool was_from = acc[from] != 0;
        acc[from] ^= mk;
        nonzero += (acc[from] != 0) - was_from;
        const bool was_to = acc[to] != 0;
        acc[to] ^= mk;
        nonzero += (acc[to] != 0) - was_to;
    };
    while (true) {
        if (nonzero == 0) {
            ++out.satisfying;
            if (pair_a >= 0 && label[pair_a] == label[pair_b]) ++out.satisfying_and_pair;
        }
        int t = 0;
        while (t < m && label[t] == K - 1) {
            move_row(t, K - 1, 0);
            label[t] = 0;
            ++t;
        }
        if (t == m) break;
        move_row(t, label[t], label[t] + 1);
        ++label[t];
    }
    return out;
}

}  // namespace

Rational parity_probability(const AlphaMatrix& gamma, int K, int max_rows) {
    if (K < 1) throw std::invalid_argument("parity_probability: K must be >= 1");
    const Support s = support_of(gamma);
    const int m = static_cast<int>(s.rows.size());
    if (m > max_rows) throw std::invalid_argument("parity_probability: too many support rows");
    const auto count = count_parity(s.odd_masks, K);
    return Rational(count.satisfying, int_pow(K, static_cast<unsigned>(m)));
}

ScaledRational moment(const AlphaMatrix& gamma, int K, int max_rows) {
    return {gamma.total(), parity_probability(gamma, K, max_rows)};
}

ScaledRational cross_moment(const AlphaMatrix& gamma, int K, int max_rows) {
    if (K < 1) throw std::invalid_argument("cross_moment: K must be >= 1");
    const Support s = support_of(gamma);
    const bool has0 = std::binary_search(s.rows.begin(), s.rows.end(), 0);
    const bool has1 = std::binary_search(s.rows.begin(), s.rows.end(), 1);
    if (!has0 || !has1) {
        // a distinguished row outside the support is independent of X^gamma,
        // so the indicator factorizes to 1/K
        ScaledRational mom = moment(gamma, K, max_rows);
        return {mom.eps_degree, mom.coeff / K};
    }
    const int m = static_cast<int>(s.rows.size());
    if (m > max_rows) throw std::invalid_argument("cross_moment: too many support rows");
    const int pos0 =
        static_cast<int>(std::lower_bound(s.rows.begin(), s.rows.end(), 0) - s.rows.begin());
    const int pos1 =
        static_cast<int>(std::lower_bound(s.rows.begin(), s.rows.end(), 1) - s.rows.begin());
    const auto count = count_parity(s.odd_masks, K, pos0, pos1);
    return {gamma.total(),
            Rational(count.satisfying_and_pair, int_pow(K, static_cast<unsigned>(m)))};
}

ScaledRational CumulantTable::cumulant(const AlphaMatrix& alpha) {
    const int degree = alpha.total();
    if (alpha.empty()) return {0, Rational(1, K_)};
    if (degree > max_degree_)
        throw std::invalid_argument("CumulantTable: degree above the configured cap");
    if (use_filter_ && !null_cumulant_filter(alpha)) return {degree, 0};

    const std::string key = alpha.encode();
    if (auto it = memo_.find(key); it != memo_.end()) return {degree, it->second};

    Rational kappa = cross_moment(alpha, K_, max_rows_).coeff;

    // walk the full sub-lattice beta <= alpha cell by cell, skipping beta = alpha
    const auto& cells = alpha.entries;
    const int c = static_cast<int>(cells.size());
    std::vector<int> beta(c, 0);
    while (true) {
        bool is_alpha = true;
        for (int q = 0; q < c; ++q)
            if (beta[q] != cells[q][2]) {
                is_alpha = false;
                break;
            }
        if (!is_alpha) {
            AlphaMatrix b, diff;
            b.n = diff.n = alpha.n;
            b.p = diff.p = alpha.p;
            BigInt choose = 1;
            for (int q = 0; q < c; ++q) {
                if (beta[q] > 0) b.entries.push_back({cells[q][0], cells[q][1], beta[q]});
                const int d = cells[q][2] - beta[q];
                if (d > 0) diff.entries.push_back({cells[q][0], cells[q][1], d});
                choose *=
                    binomial(static_cast<unsigned>(cells[q][2]), static_cast<unsigned>(beta[q]));
            }
            const Rational mom = moment(diff, K_, max_rows_).coeff;
            if (mom != 0) {
                const Rational kb = cumulant(b).coeff;
                if (kb != 0) kappa -= mom * Rational(choose) * kb;
            }
        }
        int t = 0;
        while (t < c && beta[t] == cells[t][2]) {
            beta[t] = 0;
            ++t;
        }
        if (t == c) break;
        ++beta[t];
    }

    memo_.emplace(key, kappa);
    return {degree, kappa};
}

bool numbergroups_check(const AlphaMatrix& gamma, int max_rows) {
    const Support s = support_of(gamma);
    const int m = static_cast<int>(s.rows.size());
    if (m > max_rows) throw std::invalid_argument("numbergroups_check: too many support rows");
    if (m == 0) return true;
    const GraphStats g = graph_stats(gamma);
    const int bound_times_2 = g.edges - 2 * g.r + 2 * g.cc;
    bool ok = true;
    for_each_set_partition(m, m, [&](const std::vector<int>& rgs) {
        if (!ok) return;
        int groups = 0;
        for (int v : rgs) groups = std::max(groups, v + 1);
        std::vector<std::uint64_t> acc(groups, 0);
        for (int t = 0; t < m; ++t) acc[rgs[t]] ^= s.odd_masks[t];
        for (int k = 0; k < groups; ++k)
            if (acc[k] != 0) return;  // not even with respect to gamma
        if (2 * groups > bound_times_2) ok = false;
    });
    return ok;
}

std::uint64_t enumeration_size(int n, int p, int D, std::uint64_t cap) {
    // C(np + D, D), saturating at cap
    std::uint64_t size = 1;
    const std::uint64_t cells = static_cast<std::uint64_t>(n) * p;
    for (int t = 1; t <= D; ++t) {
        size = size * (cells + t) / t;  // exact: product of t consecutive over t!
        if (size > cap) return cap + 1;
    }
    return size;
}

namespace {

// Visits every nonzero alpha in N^{n x p} with |alpha| <= D.
template <typename Fn>
void for_each_alpha(int n, int p, int D, Fn&& fn) {
    std::vector<std::array<int, 3>> entries;
    auto rec = [&](auto&& self, int cell, int remaining) -> void {
        if (cell == n * p) {
            if (!entries.empty()) {
                AlphaMatrix a;
                a.n = n;
                a.p = p;
                a.entries = entries;
                fn(a);
            }
            return;
        }
        self(self, cell + 1, remaining);
        const int i = cell / p, j = cell % p;
        for (int mult = 1; mult <= remaining; ++mult) {
            entries.push_back({i, j, mult});
            self(self, cell + 1, remaining - mult);
            entries.pop_back();
        }
    };
    rec(rec, 0, D);
}

}  // namespace

Rational corr_bound_sum(int n, int p, int D, int K, const Rational& eps_sq,
                        std::uint64_t budget) {
    if (n < 2 || p < 1 || D < 0 || K < 1)
        throw std::invalid_argument("corr_bound_sum: bad parameters");
    if (enumeration_size(n, p, D, budget) > budget)
        throw std::runtime_error("corr_bound_sum: enumeration exceeds budget");
    Rational total = Rational(1, BigInt(K) * K);  // alpha = 0 term
    CumulantTable table(K, /*use_filter=*/true, /*max_rows=*/std::max(n, 2),
                        /*max_degree=*/std::max(D, 6));
    for_each_alpha(n, p, D, [&](const AlphaMatrix& alpha) {
        if (!null_cumulant_filter(alpha)) return;
        const ScaledRational kappa = table.cumulant(alpha);
        if (kappa.coeff == 0) return;
        BigInt alpha_fact = 1;
        for (const auto& e : alpha.entries) alpha_fact *= factorial(static_cast<unsigned>(e[2]));
        total += kappa.coeff * kappa.coeff *
                 rational_pow(eps_sq, static_cast<unsigned>(alpha.total())) / Rational(alpha_fact);
    });
    return total;
}

BoundReport bound_report(int n, int p, int K, double delta_bar_sq, int D, bool gaussian_prior) {
    if (n <= 0 || p <= 0 || K <= 0 || D < 0 || delta_bar_sq < 0)
        throw std::invalid_argument("bound_report: bad parameters");
    BoundReport rep;
    const double d = static_cast<double>(D);
    const double poly = std::pow(d, 8) * std::pow(1.0 + d, 4);
    const double crowd = std::max(static_cast<double>(n) / (static_cast<double>(K) * K), 1.0);
    rep.zeta = delta_bar_sq * delta_bar_sq * poly / p * crowd;
    rep.zeta_bar = delta_bar_sq * delta_bar_sq * poly * n / (static_cast<double>(p) * p) * crowd;
    rep.p_ge_n = p >= n;
    rep.gaussian_prior_heuristic = gaussian_prior;
    const double z = rep.p_ge_n ? rep.zeta : rep.zeta_bar;
    rep.applicable = z < 1.0;
    if (rep.applicable) {
        const double s = std::sqrt(z);
        rep.corr_sq_upper = (1.0 + z / ((1.0 - s) * (1.0 - s) * (1.0 - s))) /
                            (static_cast<double>(K) * K);
        rep.mmse_lower = 1.0 / K - rep.corr_sq_upper;
    } else {
        // the bound is vacuous; fall back to corr^2 <= E[x^2]
        rep.corr_sq_upper = 1.0 / K;
        rep.mmse_lower = 0.0;
    }
    return rep;
}

MonteCarloEstimate mc_moment(const AlphaMatrix& gamma, int K, double eps, int samples,
                             std::uint64_t seed) {
    if (samples < 1000) throw std::invalid_argument("mc_moment: need at least 1000 samples");
    const Support s = support_of(gamma);
    const int m = static_cast<int>(s.rows.size());
    const int degree = gamma.total();

    // only odd-multiplicity cells can flip the sign of X^gamma
    std::vector<std::pair<int, int>> odd_cells;  // (row position, col position)
    for (int t = 0; t < m; ++t)
        for (const auto& [cp, mult] : s.row_cells[t])
            if (mult % 2 != 0) odd_cells.push_back({t, cp});

    const std::uint64_t label_seed = rng::substream(seed, rng::kTagLabels);
    const std::uint64_t sign_seed = rng::substream(seed, rng::kTagMeans);
    std::int64_t signed_count = 0;
    std::vector<int> label(m);
    for (int sidx = 0; sidx < samples; ++sidx) {
        for (int t = 0; t < m; ++t)
            label[t] = static_cast<int>(
                rng::bounded(label_seed, static_cast<std::uint64_t>(sidx), t, K));
        unsigned parity = 0;
        for (const auto& [t, cp] : odd_cells) {
            const std::uint64_t bits =
                rng::word(sign_seed, static_cast<std::uint64_t>(sidx), label[t]);
            parity ^= static_cast<unsigned>(bits >> cp) & 1u;
        }
        signed_count += parity ? -1 : 1;
    }
    const double scale = std::pow(eps, degree);
    const double mean = static_cast<double>(signed_count) / samples;
    MonteCarloEstimate est;
    est.estimate = scale * mean;
    const double var = samples > 1
                           ? (1.0 - mean * mean) * samples / (samples - 1.0)
                           : 0.0;
    est.stderr_ = scale * std::sqrt(std::max(var, 0.0) / samples);
    return est;
}

namespace {

// exponent vectors of all monomials in `vars` variables with total degree <= D
std::vector<std::vector<std::pair<int, int>>> monomial_basis(int vars, int D) {
    std::vector<std::vector<std::pair<int, int>>> basis;
    std::vector<std::pair<int, int>> current;
    auto rec = [&](auto&& self, int v, int remaining) -> void {
        if (v == vars) {
            basis.push_back(current);
            return;
        }
        self(self, v + 1, remaining);
        for (int e = 1; e <= remaining; ++e) {
            current.push_back({v, e});
            self(self, v + 1, remaining - e);
            current.pop_back();
        }
    };
    rec(rec, 0, D);
    return basis;
}

}  // namespace

MonteCarloEstimate empirical_mmse(int n, int p, int K, double delta_bar_sq, int D, int samples,
                                  std::uint64_t seed, int feature_budget) {
    if (n < 2 || p < 1 || K < 1 || D < 0 || delta_bar_sq < 0)
        throw std::invalid_argument("empirical_mmse: bad parameters");
    const int vars = n * p;
    const auto fcount = enumeration_size(n, p, D, static_cast<std::uint64_t>(feature_budget));
    if (fcount > static_cast<std::uint64_t>(feature_budget))
        throw std::runtime_error("empirical_mmse: feature count exceeds budget");
    const auto basis = monomial_basis(vars, D);
    const int F = static_cast<int>(basis.size());
    if (samples < 3 * F)
        throw std::invalid_argument("empirical_mmse: more samples needed for this feature count");

    const double eps = std::sqrt(delta_bar_sq / p);
    const std::uint64_t label_seed = rng::substream(seed, rng::kTagLabels);
    const std::uint64_t sign_seed = rng::substream(seed, rng::kTagMeans);
    const std::uint64_t noise_seed = rng::substream(seed, rng::kTagNoise);

    Eigen::MatrixXd phi(samples, F);
    Eigen::VectorXd target(samples);
    std::vector<double> y(vars);
    std::vector<int> label(n);
    for (int sidx = 0; sidx < samples; ++sidx) {
        for (int i = 0; i < n; ++i)
            label[i] =
                static_cast<int>(rng::bounded(label_seed, static_cast<std::uint64_t>(sidx), i, K));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) {
                const std::uint64_t bit =
                    rng::word(sign_seed, static_cast<std::uint64_t>(sidx),
                              static_cast<std::uint64_t>(label[i]) * p + j) &
                    1u;
                const double mu = bit ? eps : -eps;
                y[i * p + j] = mu + rng::normal(noise_seed, static_cast<std::uint64_t>(sidx),
                                                static_cast<std::uint64_t>(i) * p + j);
            }
        target(sidx) = label[0] == label[1] ? 1.0 : 0.0;
        for (int f = 0; f < F; ++f) {
            double v = 1.0;
            for (const auto& [var, e] : basis[f])
                for (int t = 0; t < e; ++t) v *= y[var];
            phi(sidx, f) = v;
        }
    }

    const int train = samples * 3 / 4;
    const int test = samples - train;
    const auto phi_train = phi.topRows(train);
    const auto phi_test = phi.bottomRows(test);
    const auto x_train = target.head(train);
    const auto x_test = target.tail(test);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi_train);
    Eigen::VectorXd w;
    if (qr.rank() < F) {
        // rank-deficient design: ridge fallback on the normal equations
        Eigen::MatrixXd gram = phi_train.transpose() * phi_train;
        gram.diagonal().array() += 1e-10;
        w = gram.ldlt().solve(phi_train.transpose() * x_train);
    } else {
        w = qr.solve(x_train);
    }

    Eigen::VectorXd residual = phi_test * w - x_test;
    Eigen::VectorXd sq = residual.array().square();
    const double mse = sq.mean();

    // bootstrap standard error of the held-out mean squared residual
    const int B = 200;
    const std::uint64_t boot_seed = rng::substream(seed, 0x626F6F74ull);
    double acc = 0, acc2 = 0;
    for (int b = 0; b < B; ++b) {
        double s = 0;
        for (int t = 0; t < test; ++t)
            s += sq(static_cast<Eigen::Index>(
                rng::bounded(boot_seed, static_cast<std::uint64_t>(b), t, test)));
        const double mean_b = s / test;
        acc += mean_b;
        acc2 += mean_b * mean_b;
    }
    const double boot_mean = acc / B;
    const double boot_var = std::max(acc2 / B - boot_mean * boot_mean, 0.0);

    MonteCarloEstimate est;
    est.estimate = mse;
    est.stderr_ = std::sqrt(boot_var * B / (B - 1.0));
    return est;
}

std::vector<CumulantRow> cumulant_table(int n, int p, int D, int K, std::uint64_t budget) {
    if (enumeration_size(n, p, D, budget) > budget)
        throw std::runtime_error("cumulant_table: enumeration exceeds budget");
    std::vector<CumulantRow> rows;
    CumulantRow zero;
    zero.support_encoding = "";
    zero.kappa_numerator = 1;
    zero.kappa_denominator = K;
    rows.push_back(zero);
    CumulantTable table(K, true, std::max(n, 2), std::max(D, 6));
    for_each_alpha(n, p, D, [&](const AlphaMatrix& alpha) {
        if (!null_cumulant_filter(alpha)) return;
        const ScaledRational kappa = table.cumulant(alpha);
        if (kappa.coeff == 0) return;
        const GraphStats g = graph_stats(alpha);
        CumulantRow row;
        row.support_encoding = alpha.encode();
        row.degree = g.edges;
        row.m = g.m;
        row.r = g.r;
        row.cc = g.cc;
        row.kappa_numerator = boost::multiprecision::numerator(kappa.coeff);
        row.kappa_denominator = boost::multiprecision::denominator(kappa.coeff);
        row.eps_degree = kappa.eps_degree;
        rows.push_back(std::move(row));
    });
    return rows;
}

std::string cumulant_table_csv(const std::vector<CumulantRow>& rows) {
    std::ostringstream out;
    out << "support_encoding,abs_alpha,m,r,cc,kappa_numerator,kappa_denominator,eps_degree\n";
    for (const auto& row : rows) {
        out << row.support_encoding << ',' << row.degree << ',' << row.m << ',' << row.r << ','
            << row.cc << ',' << row.kappa_numerator.str() << ',' << row.kappa_denominator.str()
            << ',' << row.eps_degree << '\n';
    }
    return out.str();
}

}  // namespace cluslab::lowdegree
