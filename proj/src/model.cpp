#include "cluslab/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cluslab/rng.hpp"

namespace cluslab {

const char* prior_name(Prior prior) {
    switch (prior) {
        case Prior::FixedMeans: return "fixed_means";
        case Prior::BernoulliHypercube: return "bernoulli_hypercube";
        case Prior::GaussianPrior: return "gaussian";
    }
    return "fixed_means";
}

Prior prior_from_name(const std::string& name) {
    if (name == "fixed_means") return Prior::FixedMeans;
    if (name == "bernoulli_hypercube") return Prior::BernoulliHypercube;
    if (name == "gaussian") return Prior::GaussianPrior;
    throw std::invalid_argument("unknown prior: " + name);
}

namespace {

Eigen::MatrixXd noisy_data(const Eigen::MatrixXd& means, const Partition& labels, double sigma,
                           std::uint64_t seed) {
    const auto n = static_cast<int>(labels.labels.size());
    const auto p = static_cast<int>(means.cols());
    const std::uint64_t noise_seed = rng::substream(seed, rng::kTagNoise);
    Eigen::MatrixXd data(n, p);
    for (int i = 0; i < n; ++i) {
        const int k = labels.labels[i];
        for (int j = 0; j < p; ++j)
            data(i, j) = means(k, j) + sigma * rng::normal(noise_seed, i, j);
    }
    return data;
}

Partition uniform_labels(int n, int K, std::uint64_t seed) {
    const std::uint64_t label_seed = rng::substream(seed, rng::kTagLabels);
    std::vector<int> lab(n);
    for (int i = 0; i < n; ++i)
        lab[i] = static_cast<int>(rng::bounded(label_seed, i, 0, static_cast<std::uint64_t>(K)));
    return Partition(std::move(lab), K);
}

}  // namespace

MixtureInstance sample_fixed_means(const Eigen::MatrixXd& means, const Partition& labels,
                                   double sigma, std::uint64_t seed) {
    if (sigma <= 0) throw std::invalid_argument("sample_fixed_means: sigma must be positive");
    if (labels.K != means.rows())
        throw std::invalid_argument("sample_fixed_means: labels.K does not match means rows");
    MixtureInstance inst;
    inst.n = labels.n();
    inst.p = static_cast<int>(means.cols());
    inst.K = static_cast<int>(means.rows());
    inst.sigma = sigma;
    inst.means = means;
    inst.labels = labels;
    inst.data = noisy_data(means, labels, sigma, seed);
    inst.prior = Prior::FixedMeans;
    inst.seed = seed;
    return inst;
}

MixtureInstance sample_bernoulli_prior(int n, int p, int K, double delta_bar_sq, double sigma,
                                       std::uint64_t seed) {
    if (n <= 0 || p <= 0 || K <= 0 || sigma <= 0 || delta_bar_sq < 0)
        throw std::invalid_argument("sample_bernoulli_prior: nonpositive parameter");
    const double eps = sigma * std::sqrt(delta_bar_sq / p);
    const std::uint64_t mean_seed = rng::substream(seed, rng::kTagMeans);
    Eigen::MatrixXd means(K, p);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j)
            means(k, j) = (rng::word(mean_seed, k, j) & 1u) ? eps : -eps;

    MixtureInstance inst;
    inst.n = n;
    inst.p = p;
    inst.K = K;
    inst.sigma = sigma;
    inst.means = std::move(means);
    inst.labels = uniform_labels(n, K, seed);
    inst.data = noisy_data(inst.means, inst.labels, sigma, seed);
    inst.prior = Prior::BernoulliHypercube;
    inst.delta_bar_sq = delta_bar_sq;
    inst.seed = seed;
    return inst;
}

MixtureInstance sample_gaussian_prior(int n, int p, int K, double delta_bar_sq, double sigma,
                                      std::uint64_t seed) {
    if (n <= 0 || p <= 0 || K <= 0 || sigma <= 0 || delta_bar_sq < 0)
        throw std::invalid_argument("sample_gaussian_prior: nonpositive parameter");
    const double eps = sigma * std::sqrt(delta_bar_sq / p);
    const std::uint64_t mean_seed = rng::substream(seed, rng::kTagMeans);
    Eigen::MatrixXd means(K, p);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j) means(k, j) = eps * rng::normal(mean_seed, k, j);

    MixtureInstance inst;
    inst.n = n;
    inst.p = p;
    inst.K = K;
    inst.sigma = sigma;
    inst.means = std::move(means);
    inst.labels = uniform_labels(n, K, seed);
    inst.data = noisy_data(inst.means, inst.labels, sigma, seed);
    inst.prior = Prior::GaussianPrior;
    inst.delta_bar_sq = delta_bar_sq;
    inst.seed = seed;
    return inst;
}

namespace {

using Word = std::uint64_t;

int hamming(const std::vector<Word>& a, const std::vector<Word>& b) {
    int h = 0;
    for (std::size_t w = 0; w < a.size(); ++w)
        h += __builtin_popcountll(a[w] ^ b[w]);
    return h;
}

std::vector<Word> gray_point(std::uint64_t t, int words) {
    std::vector<Word> v(words, 0);
    v[0] = t ^ (t >> 1);
    return v;
}

// Fixed internal stream: the packing takes no seed and must be a pure
// function of (K, p).
std::vector<Word> pseudorandom_point(int p, int words, std::uint64_t salt, std::uint64_t t) {
    std::vector<Word> v(words);
    for (int w = 0; w < words; ++w) v[w] = rng::word(salt, t, static_cast<std::uint64_t>(w));
    const int tail = p % 64;
    if (tail) v[words - 1] &= (Word(1) << tail) - 1;
    return v;
}

}  // namespace

Eigen::MatrixXd hypercube_packing(int K, int p, double delta_bar_sq, double sigma) {
    if (K <= 0 || p <= 0 || delta_bar_sq < 0 || sigma <= 0)
        throw std::invalid_argument("hypercube_packing: nonpositive parameter");
    if (p * std::log(2.0) / 4.0 < std::log(static_cast<double>(K)))
        throw std::invalid_argument("hypercube_packing: need (p/4) log 2 >= log K");

    const int min_dist = (p + 3) / 4;
    const int words = (p + 63) / 64;
    const bool exhaustive = p <= 20;
    const std::uint64_t n_candidates =
        exhaustive ? (std::uint64_t(1) << p)
                   : 512 * static_cast<std::uint64_t>(K) + 1024;
    const std::uint64_t salt = rng::mix64(0x7061636Bull ^ (static_cast<std::uint64_t>(K) << 32) ^
                                          static_cast<std::uint64_t>(p));

    std::vector<std::vector<Word>> accepted;
    accepted.reserve(K);
    accepted.push_back(exhaustive ? gray_point(0, words) : pseudorandom_point(p, words, salt, 0));

    while (static_cast<int>(accepted.size()) < K) {
        int best_min = -1;
        std::vector<Word> best;
        for (std::uint64_t t = 0; t < n_candidates; ++t) {
            auto cand = exhaustive ? gray_point(t, words) : pseudorandom_point(p, words, salt, t);
            int dmin = std::numeric_limits<int>::max();
            for (const auto& a : accepted) dmin = std::min(dmin, hamming(cand, a));
            if (dmin > best_min) {
                best_min = dmin;
                best = std::move(cand);
                if (best_min == p) break;
            }
        }
        if (best_min < min_dist)
            throw std::runtime_error(
                "hypercube_packing: greedy exhausted before K points; retry with larger p");
        accepted.push_back(std::move(best));
    }

    const double eps = sigma * std::sqrt(2.0 * delta_bar_sq / p);
    Eigen::MatrixXd means(K, p);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < p; ++j)
            means(k, j) = ((accepted[k][j / 64] >> (j % 64)) & 1u) ? eps : -eps;
    // the packing window holds pair by pair
    for (int l = 0; l < K; ++l)
        for (int r = l + 1; r < K; ++r) {
            const double v = (means.row(l) - means.row(r)).squaredNorm() / (2 * sigma * sigma);
            if (v < delta_bar_sq - 1e-9 || v > 4 * delta_bar_sq + 1e-9)
                throw std::logic_error("hypercube_packing: separation window violated");
        }
    return means;
}

SeparationReport separation(const Eigen::MatrixXd& means, double sigma, const Partition& labels) {
    const auto K = static_cast<int>(means.rows());
    const auto p = static_cast<int>(means.cols());
    if (K < 2) throw std::invalid_argument("separation: need K >= 2");
    double min_sq = std::numeric_limits<double>::infinity();
    for (int l = 0; l < K; ++l)
        for (int r = l + 1; r < K; ++r)
            min_sq = std::min(min_sq, (means.row(r) - means.row(l)).squaredNorm());

    SeparationReport rep;
    rep.delta_sq = min_sq / (2.0 * sigma * sigma);
    const double n = labels.n();
    rep.s_sq = std::min(rep.delta_sq, n * rep.delta_sq * rep.delta_sq / (p * static_cast<double>(K)));
    const int m = balancedness(labels).m;
    rep.s_tilde_sq = std::min(rep.delta_sq, rep.delta_sq * rep.delta_sq * m / p);
    return rep;
}

Balancedness balancedness(const Partition& labels) {
    Balancedness b;
    b.m = std::numeric_limits<int>::max();
    b.m_plus = 0;
    for (int s : labels.group_sizes()) {
        if (s == 0) continue;
        b.m = std::min(b.m, s);
        b.m_plus = std::max(b.m_plus, s);
    }
    if (b.m_plus == 0) throw std::invalid_argument("balancedness: empty partition");
    b.alpha = static_cast<double>(b.m_plus) / b.m;
    return b;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    if (static_cast<int>(j.size()) != rows) throw std::invalid_argument("matrix: bad row count");
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[i].size()) != cols)
            throw std::invalid_argument("matrix: bad column count");
        for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

}  // namespace

nlohmann::json instance_to_json(const MixtureInstance& inst) {
    nlohmann::json j;
    j["n"] = inst.n;
    j["p"] = inst.p;
    j["K"] = inst.K;
    j["sigma"] = inst.sigma;
    j["means"] = matrix_to_json(inst.means);
    j["labels"] = inst.labels.labels;
    j["data"] = matrix_to_json(inst.data);
    j["prior"] = prior_name(inst.prior);
    if (inst.delta_bar_sq)
        j["delta_bar_sq"] = *inst.delta_bar_sq;
    else
        j["delta_bar_sq"] = nullptr;
    j["seed"] = inst.seed;
    return j;
}

MixtureInstance instance_from_json(const nlohmann::json& j) {
    MixtureInstance inst;
    inst.n = j.at("n").get<int>();
    inst.p = j.at("p").get<int>();
    inst.K = j.at("K").get<int>();
    inst.sigma = j.at("sigma").get<double>();
    inst.means = matrix_from_json(j.at("means"), inst.K, inst.p);
    inst.labels = Partition(j.at("labels").get<std::vector<int>>(), inst.K);
    inst.data = matrix_from_json(j.at("data"), inst.n, inst.p);
    inst.prior = prior_from_name(j.at("prior").get<std::string>());
    if (!j.at("delta_bar_sq").is_null()) inst.delta_bar_sq = j.at("delta_bar_sq").get<double>();
    inst.seed = j.at("seed").get<std::uint64_t>();
    return inst;
}

}  // namespace cluslab
