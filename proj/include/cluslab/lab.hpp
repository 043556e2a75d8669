#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cluslab/model.hpp"

namespace cluslab::lab {

enum class Algorithm { ExactKMeans, Lloyd, SingleLinkage, Spectral };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct SweepConfig {
    std::vector<int> n;
    std::vector<int> p;
    std::vector<int> K;
    std::vector<double> delta_bar_sq;
    std::vector<Algorithm> algorithms;
    int trials = 1;
    double sigma = 1.0;
    Prior prior = Prior::BernoulliHypercube;
    std::uint64_t seed = 0;
    std::string output_path;
    std::optional<int> D;       // attach low-degree bound columns per cell
    bool record_runtime = false;  // wall-clock timing breaks byte-identical reruns
    int exact_kmeans_max_n = 14;
    int lloyd_restarts = 5;
    int lloyd_max_iters = 100;
};

// Strict parser: versioned schema, unknown keys rejected.
SweepConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SweepConfig& cfg);

struct SweepRecord {
    int n = 0;
    int p = 0;
    int K = 0;
    double delta_bar_sq = 0;
    Algorithm algorithm = Algorithm::Lloyd;
    int trial = 0;
    std::uint64_t seed = 0;
    double err = 0;
    double partnership_mse = 0;
    std::int64_t runtime_ms = 0;
    std::string flags;  // semicolon-separated markers, e.g. "regime=hard;skipped"
    std::optional<double> zeta;
    std::optional<double> mmse_lower;
    bool skipped = false;
};

// Documented per-trial seed derivation: the master seed folded with the cell
// index, algorithm id and trial index through the 64-bit mixer, so trials are
// order-independent.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t algorithm,
                          std::uint64_t trial);

// One record per (cell, algorithm, trial), in deterministic order regardless
// of the thread count. Infeasible exact-kmeans cells yield flagged records.
std::vector<SweepRecord> run_sweep(const SweepConfig& cfg, int threads = 1);

std::string records_to_csv(const std::vector<SweepRecord>& records, bool with_lowdegree);
std::vector<SweepRecord> records_from_csv(const std::string& csv);

// Hardness-table regime label for a cell, from the published thresholds:
// easy when sep >= sqrt(pK^2/n) ∧ sqrt(p log n), impossible when
// sep <= sqrt(pK log K/n) ∨ log K, hard in between.
std::string regime_label(int n, int p, int K, double separation_sq);

struct RecoveryPoint {
    double delta = 0;  // packing parameter (squared separation scale)
    double exact_recovery_rate = 0;
};

// Fraction of trials with err == 0 per grid value, means from
// hypercube_packing at that scale.
std::vector<RecoveryPoint> recovery_curve(int n, int p, int K,
                                          const std::vector<double>& delta_grid,
                                          Algorithm algorithm, int trials, std::uint64_t seed,
                                          int threads = 1);

std::string recovery_to_csv(const std::vector<RecoveryPoint>& points);

// Bundles the closed-form bound, the exact correlation sum (when the
// enumeration budget allows), the regression estimate and the trivial MSE
// into one comparison document.
nlohmann::json lowdegree_report(int n, int p, int K, double delta_bar_sq, int D, int samples,
                                std::uint64_t seed);

// Pool-adjacent-violators fit of a non-decreasing sequence (least squares).
std::vector<double> isotonic_fit(const std::vector<double>& values);

}  // namespace cluslab::lab
