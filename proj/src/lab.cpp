#include "cluslab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cluslab/cluster.hpp"
#include "cluslab/lowdegree.hpp"
#include "cluslab/metrics.hpp"
#include "cluslab/rng.hpp"

namespace cluslab::lab {

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::ExactKMeans: return "exact_kmeans";
        case Algorithm::Lloyd: return "lloyd";
        case Algorithm::SingleLinkage: return "single_linkage";
        case Algorithm::Spectral: return "spectral";
    }
    return "lloyd";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "exact_kmeans") return Algorithm::ExactKMeans;
    if (name == "lloyd") return Algorithm::Lloyd;
    if (name == "single_linkage") return Algorithm::SingleLinkage;
    if (name == "spectral") return Algorithm::Spectral;
    throw std::invalid_argument("unknown algorithm: " + name);
}

namespace {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

void require_known_keys(const nlohmann::json& j, const std::vector<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("config: unknown key '" + it.key() + "'");
    }
}

}  // namespace

SweepConfig config_from_json(const nlohmann::json& j) {
    require_known_keys(j, {"schema_version", "n", "p", "K", "delta_bar_sq", "algorithms", "trials",
                           "sigma", "prior", "seed", "output_path", "D", "record_runtime",
                           "exact_kmeans_max_n", "lloyd_restarts", "lloyd_max_iters"});
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
        throw ConfigError("config: schema_version must be 1");
    SweepConfig cfg;
    cfg.n = j.at("n").get<std::vector<int>>();
    cfg.p = j.at("p").get<std::vector<int>>();
    cfg.K = j.at("K").get<std::vector<int>>();
    cfg.delta_bar_sq = j.at("delta_bar_sq").get<std::vector<double>>();
    for (const auto& name : j.at("algorithms").get<std::vector<std::string>>())
        cfg.algorithms.push_back(algorithm_from_name(name));
    cfg.trials = j.at("trials").get<int>();
    cfg.sigma = j.value("sigma", 1.0);
    cfg.prior = prior_from_name(j.value("prior", std::string("bernoulli_hypercube")));
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.output_path = j.value("output_path", std::string());
    if (j.contains("D")) cfg.D = j.at("D").get<int>();
    cfg.record_runtime = j.value("record_runtime", false);
    cfg.exact_kmeans_max_n = j.value("exact_kmeans_max_n", 14);
    cfg.lloyd_restarts = j.value("lloyd_restarts", 5);
    cfg.lloyd_max_iters = j.value("lloyd_max_iters", 100);
    if (cfg.n.empty() || cfg.p.empty() || cfg.K.empty() || cfg.delta_bar_sq.empty() ||
        cfg.algorithms.empty())
        throw ConfigError("config: empty grid");
    if (cfg.trials < 1) throw ConfigError("config: trials must be >= 1");
    if (cfg.sigma <= 0) throw ConfigError("config: sigma must be positive");
    for (int v : cfg.n)
        if (v < 1) throw ConfigError("config: n values must be positive");
    for (int v : cfg.p)
        if (v < 1) throw ConfigError("config: p values must be positive");
    for (int v : cfg.K)
        if (v < 1) throw ConfigError("config: K values must be positive");
    for (double v : cfg.delta_bar_sq)
        if (v < 0) throw ConfigError("config: delta_bar_sq values must be nonnegative");
    return cfg;
}

nlohmann::json config_to_json(const SweepConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n"] = cfg.n;
    j["p"] = cfg.p;
    j["K"] = cfg.K;
    j["delta_bar_sq"] = cfg.delta_bar_sq;
    std::vector<std::string> algs;
    for (auto a : cfg.algorithms) algs.push_back(algorithm_name(a));
    j["algorithms"] = algs;
    j["trials"] = cfg.trials;
    j["sigma"] = cfg.sigma;
    j["prior"] = prior_name(cfg.prior);
    j["seed"] = cfg.seed;
    j["output_path"] = cfg.output_path;
    if (cfg.D) j["D"] = *cfg.D;
    j["record_runtime"] = cfg.record_runtime;
    j["exact_kmeans_max_n"] = cfg.exact_kmeans_max_n;
    j["lloyd_restarts"] = cfg.lloyd_restarts;
    j["lloyd_max_iters"] = cfg.lloyd_max_iters;
    return j;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t algorithm,
                          std::uint64_t trial) {
    std::uint64_t s = rng::mix64(master);
    s = rng::mix64(s ^ rng::mix64(cell + 1));
    s = rng::mix64(s ^ rng::mix64((algorithm + 1) << 24));
    s = rng::mix64(s ^ rng::mix64((trial + 1) << 48));
    return s;
}

std::string regime_label(int n, int p, int K, double separation_sq) {
    const double pn = static_cast<double>(p);
    const double easy_thr =
        std::min(std::sqrt(pn * K * K / n), std::sqrt(pn * std::log(static_cast<double>(n))));
    const double imp_thr = std::max(std::sqrt(pn * K * std::log(static_cast<double>(K)) / n),
                                    std::log(static_cast<double>(K)));
    if (separation_sq >= easy_thr) return "easy";
    if (separation_sq <= imp_thr) return "impossible";
    return "hard";
}

namespace {

// Tiny deterministic work distributor: tasks indexed 0..count-1, results land
// in caller-allocated slots, so the output order never depends on scheduling.
// The first worker exception is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int workers = static_cast<int>(std::min<std::size_t>(threads, count));
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

MixtureInstance sample_for(const SweepConfig& cfg, int n, int p, int K, double dbsq,
                           std::uint64_t seed) {
    switch (cfg.prior) {
        case Prior::BernoulliHypercube:
            return sample_bernoulli_prior(n, p, K, dbsq, cfg.sigma, seed);
        case Prior::GaussianPrior:
            return sample_gaussian_prior(n, p, K, dbsq, cfg.sigma, seed);
        case Prior::FixedMeans: {
            // fixed-means sweeps use the deterministic packing at that scale
            const Eigen::MatrixXd means = hypercube_packing(K, p, dbsq, cfg.sigma);
            std::vector<int> lab(n);
            for (int i = 0; i < n; ++i)
                lab[i] = static_cast<int>(
                    rng::bounded(rng::substream(seed, rng::kTagLabels), i, 0, K));
            return sample_fixed_means(means, Partition(std::move(lab), K), cfg.sigma, seed);
        }
    }
    throw std::logic_error("sample_for: unreachable");
}

Partition run_algorithm(Algorithm alg, const SweepConfig& cfg, const MixtureInstance& inst,
                        std::uint64_t seed) {
    switch (alg) {
        case Algorithm::ExactKMeans:
            return exact_kmeans(inst.data, inst.K).partition;
        case Algorithm::Lloyd:
            return lloyd(inst.data, inst.K, cfg.lloyd_restarts, cfg.lloyd_max_iters, seed)
                .partition;
        case Algorithm::SingleLinkage:
            return single_linkage(inst.data, inst.K);
        case Algorithm::Spectral:
            return spectral_cluster(inst.data, inst.K, seed);
    }
    throw std::logic_error("run_algorithm: unreachable");
}

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg, int threads) {
    struct Cell {
        int n, p, K;
        double dbsq;
        std::size_t index;
    };
    std::vector<Cell> cells;
    std::size_t ci = 0;
    for (int n : cfg.n)
        for (int p : cfg.p)
            for (int K : cfg.K)
                for (double dbsq : cfg.delta_bar_sq) cells.push_back({n, p, K, dbsq, ci++});

    const std::size_t per_cell = cfg.algorithms.size() * static_cast<std::size_t>(cfg.trials);
    std::vector<SweepRecord> records(cells.size() * per_cell);

    parallel_for(records.size(), threads, [&](std::size_t idx) {
        const auto& cell = cells[idx / per_cell];
        const std::size_t rem = idx % per_cell;
        const std::size_t ai = rem / cfg.trials;
        const int trial = static_cast<int>(rem % cfg.trials);
        const Algorithm alg = cfg.algorithms[ai];
        const std::uint64_t seed = derive_seed(cfg.seed, cell.index, ai, trial);

        SweepRecord rec;
        rec.n = cell.n;
        rec.p = cell.p;
        rec.K = cell.K;
        rec.delta_bar_sq = cell.dbsq;
        rec.algorithm = alg;
        rec.trial = trial;
        rec.seed = seed;
        rec.flags = "regime=" + regime_label(cell.n, cell.p, cell.K, cell.dbsq);

        if (cfg.D) {
            const auto rep = lowdegree::bound_report(cell.n, cell.p, cell.K, cell.dbsq, *cfg.D,
                                                     cfg.prior == Prior::GaussianPrior);
            rec.zeta = rep.p_ge_n ? rep.zeta : rep.zeta_bar;
            rec.mmse_lower = rep.mmse_lower;
        }

        if (alg == Algorithm::ExactKMeans && cell.n > cfg.exact_kmeans_max_n) {
            rec.skipped = true;
            rec.flags += ";skipped";
            records[idx] = std::move(rec);
            return;
        }

        const MixtureInstance inst = sample_for(cfg, cell.n, cell.p, cell.K, cell.dbsq, seed);
        const auto t0 = std::chrono::steady_clock::now();
        const Partition result =
            run_algorithm(alg, cfg, inst, rng::substream(seed, 0x616C67ull));
        const auto t1 = std::chrono::steady_clock::now();

        rec.err = misclassification_error(result, inst.labels);
        rec.partnership_mse =
            partnership_mse(partnership_matrix(result), partnership_matrix(inst.labels));
        if (cfg.record_runtime)
            rec.runtime_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        records[idx] = std::move(rec);
    });
    return records;
}

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

std::string records_to_csv(const std::vector<SweepRecord>& records, bool with_lowdegree) {
    std::ostringstream out;
    out << "n,p,K,delta_bar_sq,algorithm,trial,seed,err,partnership_mse,runtime_ms,flags";
    if (with_lowdegree) out << ",zeta,mmse_lower";
    out << '\n';
    for (const auto& r : records) {
        out << r.n << ',' << r.p << ',' << r.K << ',' << format_double(r.delta_bar_sq) << ','
            << algorithm_name(r.algorithm) << ',' << r.trial << ',' << r.seed << ',';
        if (!r.skipped) out << format_double(r.err);
        out << ',';
        if (!r.skipped) out << format_double(r.partnership_mse);
        out << ',' << r.runtime_ms << ',' << r.flags;
        if (with_lowdegree) {
            out << ',';
            if (r.zeta) out << format_double(*r.zeta);
            out << ',';
            if (r.mmse_lower) out << format_double(*r.mmse_lower);
        }
        out << '\n';
    }
    return out.str();
}

std::vector<SweepRecord> records_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("records_from_csv: empty input");
    const bool with_lowdegree = line.find(",zeta,") != std::string::npos ||
                                line.rfind(",zeta") != std::string::npos;
    std::vector<SweepRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        while (fields.size() < (with_lowdegree ? 13u : 11u)) fields.push_back("");
        SweepRecord r;
        r.n = std::stoi(fields[0]);
        r.p = std::stoi(fields[1]);
        r.K = std::stoi(fields[2]);
        r.delta_bar_sq = std::stod(fields[3]);
        r.algorithm = algorithm_from_name(fields[4]);
        r.trial = std::stoi(fields[5]);
        r.seed = std::stoull(fields[6]);
        r.skipped = fields[7].empty();
        if (!r.skipped) {
            r.err = std::stod(fields[7]);
            r.partnership_mse = std::stod(fields[8]);
        }
        r.runtime_ms = std::stoll(fields[9]);
        r.flags = fields[10];
        if (with_lowdegree) {
            if (!fields[11].empty()) r.zeta = std::stod(fields[11]);
            if (!fields[12].empty()) r.mmse_lower = std::stod(fields[12]);
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<RecoveryPoint> recovery_curve(int n, int p, int K,
                                          const std::vector<double>& delta_grid,
                                          Algorithm algorithm, int trials, std::uint64_t seed,
                                          int threads) {
    std::vector<RecoveryPoint> points(delta_grid.size());
    std::vector<int> successes(delta_grid.size() * trials, 0);
    SweepConfig run_cfg;  // defaults for lloyd settings
    run_cfg.lloyd_restarts = 8;
    parallel_for(successes.size(), threads, [&](std::size_t idx) {
        const std::size_t gi = idx / trials;
        const int trial = static_cast<int>(idx % trials);
        const double dbsq = delta_grid[gi];
        const Eigen::MatrixXd means = hypercube_packing(K, p, dbsq, 1.0);
        const std::uint64_t ts = derive_seed(seed, gi, 0, trial);
        std::vector<int> lab(n);
        for (int i = 0; i < n; ++i)
            lab[i] =
                static_cast<int>(rng::bounded(rng::substream(ts, rng::kTagLabels), i, 0, K));
        const MixtureInstance inst =
            sample_fixed_means(means, Partition(std::move(lab), K), 1.0, ts);
        const Partition result =
            run_algorithm(algorithm, run_cfg, inst, rng::substream(ts, 0x616C67ull));
        if (misclassification_error(result, inst.labels) == 0.0) successes[idx] = 1;
    });
    for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
        int hits = 0;
        for (int t = 0; t < trials; ++t) hits += successes[gi * trials + t];
        points[gi] = {delta_grid[gi], static_cast<double>(hits) / trials};
    }
    return points;
}

std::string recovery_to_csv(const std::vector<RecoveryPoint>& points) {
    std::ostringstream out;
    out << "delta,exact_recovery_rate\n";
    for (const auto& pt : points)
        out << format_double(pt.delta) << ',' << format_double(pt.exact_recovery_rate) << '\n';
    return out.str();
}

nlohmann::json lowdegree_report(int n, int p, int K, double delta_bar_sq, int D, int samples,
                                std::uint64_t seed) {
    nlohmann::json doc;
    doc["n"] = n;
    doc["p"] = p;
    doc["K"] = K;
    doc["delta_bar_sq"] = delta_bar_sq;
    doc["D"] = D;
    doc["trivial_mse"] = 1.0 / K - 1.0 / (static_cast<double>(K) * K);

    const auto rep = lowdegree::bound_report(n, p, K, delta_bar_sq, D);
    doc["bound"] = {{"zeta", rep.zeta},
                    {"zeta_bar", rep.zeta_bar},
                    {"corr_sq_upper", rep.corr_sq_upper},
                    {"mmse_lower", rep.mmse_lower},
                    {"applicable", rep.applicable},
                    {"p_ge_n", rep.p_ge_n}};

    try {
        // rationalize dbsq/p with a fixed denominator so the sum stays exact
        const Rational eps_sq(static_cast<long long>(std::llround(delta_bar_sq * 1e9)),
                              static_cast<long long>(p) * 1000000000ll);
        const Rational sum = lowdegree::corr_bound_sum(n, p, D, K, eps_sq);
        doc["corr_bound_sum"] = static_cast<double>(sum);
    } catch (const std::exception& e) {
        doc["corr_bound_sum_omitted"] = e.what();
    }

    try {
        const auto est = lowdegree::empirical_mmse(n, p, K, delta_bar_sq, D, samples, seed);
        doc["empirical_mmse"] = {{"estimate", est.estimate}, {"stderr", est.stderr_}};
    } catch (const std::exception& e) {
        doc["empirical_mmse_omitted"] = e.what();
    }
    return doc;
}

std::vector<double> isotonic_fit(const std::vector<double>& values) {
    // pool adjacent violators, unit weights
    std::vector<double> level;
    std::vector<int> count;
    for (double v : values) {
        level.push_back(v);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const double merged = (level[level.size() - 2] * count[count.size() - 2] +
                                   level.back() * count.back()) /
                                  (count[count.size() - 2] + count.back());
            count[count.size() - 2] += count.back();
            level[level.size() - 2] = merged;
            level.pop_back();
            count.pop_back();
        }
    }
    std::vector<double> fit;
    for (std::size_t b = 0; b < level.size(); ++b)
        fit.insert(fit.end(), count[b], level[b]);
    return fit;
}

}  // namespace cluslab::lab
