#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "cluslab/cluster.hpp"
#include "cluslab/lab.hpp"
#include "cluslab/lowdegree.hpp"
#include "cluslab/metrics.hpp"
#include "cluslab/model.hpp"
#include "cluslab/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariantFailure = 1;
constexpr int kExitConfigError = 2;

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return nlohmann::json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clustering hardness laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    std::string out_path;
    int threads = 1;
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--out", out_path, "output path (default stdout)");
    app.add_option("--threads", threads, "worker thread count")->capture_default_str();

    // generate: sample one instance and emit its JSON document
    auto* generate = app.add_subcommand("generate", "sample a mixture instance");
    std::string gen_prior = "bernoulli_hypercube";
    int gen_n = 100, gen_p = 100, gen_K = 2;
    double gen_dbsq = 1.0, gen_sigma = 1.0;
    bool gen_packing = false;
    generate->add_option("--prior", gen_prior, "fixed_means|bernoulli_hypercube|gaussian");
    generate->add_option("--n", gen_n);
    generate->add_option("--p", gen_p);
    generate->add_option("--K", gen_K);
    generate->add_option("--delta-bar-sq", gen_dbsq);
    generate->add_option("--sigma", gen_sigma);
    generate->add_flag("--packing-means", gen_packing,
                       "with fixed_means, use the hypercube packing construction");

    // cluster: run one algorithm on a stored instance
    auto* cluster_cmd = app.add_subcommand("cluster", "cluster a stored instance");
    std::string cl_input, cl_algorithm = "lloyd";
    cluster_cmd->add_option("--input", cl_input, "instance JSON path")->required();
    cluster_cmd->add_option("--algorithm", cl_algorithm,
                            "exact_kmeans|lloyd|single_linkage|spectral");

    // sweep: grid experiment to CSV
    auto* sweep = app.add_subcommand("sweep", "run a sweep config");
    std::string sweep_config;
    sweep->add_option("--config", sweep_config, "sweep config JSON path")->required();

    // lowdegree: bound/estimate comparison document
    auto* lowdeg = app.add_subcommand("lowdegree", "low-degree bound report");
    int ld_n = 4, ld_p = 4, ld_K = 2, ld_D = 2, ld_samples = 20000;
    double ld_dbsq = 0.1;
    bool ld_table = false;
    lowdeg->add_option("--n", ld_n);
    lowdeg->add_option("--p", ld_p);
    lowdeg->add_option("--K", ld_K);
    lowdeg->add_option("--D", ld_D);
    lowdeg->add_option("--delta-bar-sq", ld_dbsq);
    lowdeg->add_option("--samples", ld_samples);
    lowdeg->add_flag("--table", ld_table, "emit the cumulant table as CSV instead");

    // recovery: exact-recovery curve to CSV
    auto* recovery = app.add_subcommand("recovery", "exact recovery curve");
    int rc_n = 48, rc_p = 192, rc_K = 3, rc_trials = 100;
    std::string rc_algorithm = "single_linkage";
    std::vector<double> rc_grid;
    recovery->add_option("--n", rc_n);
    recovery->add_option("--p", rc_p);
    recovery->add_option("--K", rc_K);
    recovery->add_option("--trials", rc_trials);
    recovery->add_option("--algorithm", rc_algorithm);
    recovery->add_option("--grid", rc_grid, "separation-scale grid values")->required();

    // verify: invariant suites
    auto* verify_cmd = app.add_subcommand("verify", "run invariant suites");
    std::string vf_suite = "all";
    verify_cmd->add_option("--suite", vf_suite, "metrics|cluster|lowdegree|all");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            cluslab::MixtureInstance inst;
            const auto prior = cluslab::prior_from_name(gen_prior);
            if (prior == cluslab::Prior::BernoulliHypercube) {
                inst = cluslab::sample_bernoulli_prior(gen_n, gen_p, gen_K, gen_dbsq, gen_sigma,
                                                       seed);
            } else if (prior == cluslab::Prior::GaussianPrior) {
                inst = cluslab::sample_gaussian_prior(gen_n, gen_p, gen_K, gen_dbsq, gen_sigma,
                                                      seed);
            } else {
                const Eigen::MatrixXd means =
                    gen_packing ? cluslab::hypercube_packing(gen_K, gen_p, gen_dbsq, gen_sigma)
                                : Eigen::MatrixXd::Zero(gen_K, gen_p);
                std::vector<int> lab(gen_n);
                for (int i = 0; i < gen_n; ++i) lab[i] = i % gen_K;
                inst = cluslab::sample_fixed_means(means, cluslab::Partition(lab, gen_K),
                                                   gen_sigma, seed);
            }
            write_output(out_path, cluslab::instance_to_json(inst).dump(2) + "\n");
            return kExitOk;
        }

        if (*cluster_cmd) {
            const auto inst = cluslab::instance_from_json(load_json(cl_input));
            const auto alg = cluslab::lab::algorithm_from_name(cl_algorithm);
            cluslab::Partition result;
            switch (alg) {
                case cluslab::lab::Algorithm::ExactKMeans:
                    result = cluslab::exact_kmeans(inst.data, inst.K).partition;
                    break;
                case cluslab::lab::Algorithm::Lloyd:
                    result = cluslab::lloyd(inst.data, inst.K, 5, 100, seed).partition;
                    break;
                case cluslab::lab::Algorithm::SingleLinkage:
                    result = cluslab::single_linkage(inst.data, inst.K);
                    break;
                case cluslab::lab::Algorithm::Spectral:
                    result = cluslab::spectral_cluster(inst.data, inst.K, seed);
                    break;
            }
            nlohmann::json doc;
            doc["algorithm"] = cl_algorithm;
            doc["labels"] = result.labels;
            doc["err"] = cluslab::misclassification_error(result, inst.labels);
            doc["criterion"] = cluslab::kmeans_criterion(inst.data, result);
            write_output(out_path, doc.dump(2) + "\n");
            return kExitOk;
        }

        if (*sweep) {
            cluslab::lab::SweepConfig cfg;
            try {
                cfg = cluslab::lab::config_from_json(load_json(sweep_config));
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kExitConfigError;
            }
            const auto records = cluslab::lab::run_sweep(cfg, threads);
            const std::string csv =
                cluslab::lab::records_to_csv(records, cfg.D.has_value());
            write_output(out_path.empty() ? cfg.output_path : out_path, csv);
            return kExitOk;
        }

        if (*lowdeg) {
            if (ld_table) {
                const auto rows = cluslab::lowdegree::cumulant_table(ld_n, ld_p, ld_D, ld_K);
                write_output(out_path, cluslab::lowdegree::cumulant_table_csv(rows));
            } else {
                const auto doc = cluslab::lab::lowdegree_report(ld_n, ld_p, ld_K, ld_dbsq, ld_D,
                                                                ld_samples, seed);
                write_output(out_path, doc.dump(2) + "\n");
            }
            return kExitOk;
        }

        if (*recovery) {
            const auto points = cluslab::lab::recovery_curve(
                rc_n, rc_p, rc_K, rc_grid, cluslab::lab::algorithm_from_name(rc_algorithm),
                rc_trials, seed, threads);
            write_output(out_path, cluslab::lab::recovery_to_csv(points));
            return kExitOk;
        }

        if (*verify_cmd) {
            const auto results = cluslab::verify::verify_suite(vf_suite, seed);
            nlohmann::json doc = nlohmann::json::array();
            for (const auto& r : results) {
                doc.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
                std::cerr << (r.passed ? "[PASS] " : "[FAIL] ") << r.name
                          << (r.detail.empty() ? "" : "  " + r.detail) << "\n";
            }
            write_output(out_path, doc.dump(2) + "\n");
            return cluslab::verify::all_passed(results) ? kExitOk : kExitInvariantFailure;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitOk;
}
