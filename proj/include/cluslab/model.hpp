#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>

#include "cluslab/partition.hpp"

namespace cluslab {

enum class Prior { FixedMeans, BernoulliHypercube, GaussianPrior };

const char* prior_name(Prior prior);
Prior prior_from_name(const std::string& name);

// One sampled mixture: data row i is means.row(labels[i]) plus sigma times a
// standard normal vector, all derived from the seed by counter streams.
// Immutable after construction and safe to share across threads.
struct MixtureInstance {
    int n = 0;
    int p = 0;
    int K = 0;
    double sigma = 1.0;
    Eigen::MatrixXd means;   // K x p
    Partition labels;        // ground truth
    Eigen::MatrixXd data;    // n x p
    Prior prior = Prior::FixedMeans;
    std::optional<double> delta_bar_sq;  // only for the two random priors
    std::uint64_t seed = 0;
};

MixtureInstance sample_fixed_means(const Eigen::MatrixXd& means, const Partition& labels,
                                   double sigma, std::uint64_t seed);

// Labels i.i.d. uniform on [0, K); means entries i.i.d. uniform on {+eps, -eps}
// with eps^2 = delta_bar_sq * sigma^2 / p.
MixtureInstance sample_bernoulli_prior(int n, int p, int K, double delta_bar_sq, double sigma,
                                       std::uint64_t seed);

// Same, but means entries i.i.d. centered normal with per-coordinate variance eps^2.
MixtureInstance sample_gaussian_prior(int n, int p, int K, double delta_bar_sq, double sigma,
                                      std::uint64_t seed);

// K points of the scaled hypercube {+-eps'}^p, eps' = sqrt(2/p)*Delta*sigma,
// with pairwise Hamming distance in [ceil(p/4), p]. Deterministic farthest-point
// greedy; one valid packing among many. Throws if (p/4)log 2 < log K or if the
// greedy search exhausts before finding K points (retry with larger p).
Eigen::MatrixXd hypercube_packing(int K, int p, double delta_bar_sq, double sigma);

struct SeparationReport {
    double delta_sq = 0;    // min over pairs of ||mu_r - mu_l||^2 / (2 sigma^2)
    double s_sq = 0;        // delta_sq ∧ n*delta_sq^2/(p*K)
    double s_tilde_sq = 0;  // delta_sq ∧ delta_sq^2 * m / p, m = min group size
};

SeparationReport separation(const Eigen::MatrixXd& means, double sigma, const Partition& labels);

struct Balancedness {
    double alpha = 1.0;  // m_plus / m over nonempty groups
    int m = 0;
    int m_plus = 0;
};

Balancedness balancedness(const Partition& labels);

nlohmann::json instance_to_json(const MixtureInstance& inst);
MixtureInstance instance_from_json(const nlohmann::json& j);

}  // namespace cluslab
