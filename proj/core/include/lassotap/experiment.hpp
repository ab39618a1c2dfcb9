#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lassotap/ensemble.hpp"
#include "lassotap/inference.hpp"
#include "lassotap/lasso.hpp"
#include "lassotap/model_selection.hpp"

namespace lassotap {

// Harness configuration.  Loaded from a single JSON document; all numeric
// ranges are validated at load and lambda_grid must be strictly descending.
struct ExperimentConfig {
    EnsembleSpec ensemble;
    Eigen::Index n = 1000;
    double rho = 0.1;
    double sigma2 = 0.02;
    Sigma2Mode sigma2_mode = Sigma2Mode::known;
    std::vector<double> lambda_grid;  // singleton == scalar lambda
    int n_replications = 100;
    std::uint64_t seed = 1;
    std::vector<double> alphas = {0.01, 0.05, 0.1, 0.2, 0.5};
    double alpha_sig = 0.05;
    std::string output_dir = "out";
    int workers = 0;  // 0 = hardware concurrency
    int cv_folds = 40;
    int cv_grid_size = 12;
    double cv_grid_min_ratio = 1e-2;
    SolverOptions solver;
    bool write_replication_csv = true;

    Eigen::Index m() const;  // round(gamma * n)
    void validate() const;
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// Per-replication, per-lambda scalars feeding the figure aggregates.
struct LambdaStats {
    double lambda = 0.0;
    double rho_active = 0.0;
    double rss = 0.0;
    bool degenerate = false;  // support saturated, spectral state undefined
    double chi = 0.0;
    double q_hat = 0.0;
    double chi_hat = 0.0;
    double criterion = 0.0;  // chi_hat/q_hat^2; empirical variance for geometric
    double looe = 0.0;
    double mean_h_centered = 0.0;  // mean of h - q_hat x0
    double var_h_centered = 0.0;
    double mean_debias_err = 0.0;  // mean of x_debiased - x0
    double var_debias_err = 0.0;
};

// Pure function of (config, replication index).
struct ReplicationRecord {
    int index = 0;
    std::uint64_t matrix_seed = 0;
    std::uint64_t noise_seed = 0;
    double sigma2_used = 0.0;
    double sigma2_hat = 0.0;  // NaN when not estimated
    std::vector<LambdaStats> per_lambda;
    int lambda_star_index = 0;
    std::vector<double> fpr_at_alpha;
    std::vector<double> tpr_at_alpha;
    double coverage = 0.0;  // CI coverage at alpha_sig, counted at lambda_star
    std::vector<RocPoint> roc_test;
    std::vector<RocPoint> roc_lasso;
};

struct ExperimentSummary {
    ExperimentConfig config;
    double lambda_star = 0.0;
    int lambda_star_index = 0;
    std::vector<LambdaStats> lambda_means;  // across-replication means
    std::vector<double> fpr_at_alpha;
    std::vector<double> tpr_at_alpha;
    double coverage = 0.0;
    double sigma2_hat_mean = 0.0;
    std::vector<ReplicationRecord> records;
};

// Runs n_replications over fresh (A, xi) at fixed x0 (drawn once from the
// master seed), persists per-replication CSVs, an aggregate JSON, and the
// figure-data CSVs (qq, bias/variance vs lambda, fpr vs alpha, roc, ci-width
// vs lambda).  Workers own their RNG substreams; aggregates are invariant to
// worker count and execution order.
ExperimentSummary run_experiment(const ExperimentConfig& config);

}  // namespace lassotap
