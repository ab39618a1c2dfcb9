// Command-line front end: synthetic instance generation, LASSO fits,
// spectral de-biased inference, cross-validation, hypothesis tests, and the
// multi-replication experiment harness.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lassotap/experiment.hpp"
#include "lassotap/inference.hpp"
#include "lassotap/io.hpp"
#include "lassotap/lasso.hpp"
#include "lassotap/model_selection.hpp"
#include "lassotap/rng.hpp"
#include "lassotap/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lassotap;

namespace {

struct SolverFlags {
    double tolerance = 1e-8;
    int max_iter = 100000;
    SolverOptions options() const { return {tolerance, max_iter}; }
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
    cmd->add_option("--tol", flags.tolerance, "KKT tolerance")
        ->capture_default_str();
    cmd->add_option("--max-iter", flags.max_iter, "sweep budget")
        ->capture_default_str();
}

Sigma2Mode parse_mode(const std::string& mode) {
    if (mode == "known") return Sigma2Mode::known;
    if (mode == "estimated") return Sigma2Mode::estimated;
    throw CLI::ValidationError("--sigma2-mode must be known or estimated");
}

// Estimated-mode noise variance: K-fold CV picks lambda, then the residual
// estimator at that lambda.
double estimated_sigma2(const ProblemInstance& inst,
                        const std::vector<double>& grid, int k,
                        std::uint64_t seed, const SolverOptions& opts) {
    const CvResult cv = kfold_cv(inst.A, inst.y, grid, k, seed, opts);
    const LassoFit fit = fit_lasso(inst.A, inst.y, cv.lambda_cv, opts);
    return estimate_sigma2(fit, inst.A, inst.y);
}

void write_inference_csv(const std::string& path, const ProblemInstance& inst,
                         const LassoFit& fit, const InferenceResult& inf,
                         const TestOutcome& test) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "index,x0,x_lasso,h,x_debiased,ci_lo,ci_hi,p_value,reject\n";
    for (Eigen::Index i = 0; i < inst.x0.size(); ++i) {
        out << i << ',' << format_double(inst.x0[i]) << ','
            << format_double(fit.x_hat[i]) << ',' << format_double(inf.h[i]) << ','
            << format_double(inf.x_debiased[i]) << ','
            << format_double(inf.ci_lo[i]) << ',' << format_double(inf.ci_hi[i])
            << ',' << format_double(inf.p_values[i]) << ','
            << (test.reject[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
    }
}

json fit_summary(const LassoFit& fit) {
    json j;
    j["lambda"] = fit.lambda;
    j["rho_active"] = fit.rho_active;
    j["rss"] = fit.rss;
    j["kkt_residual"] = fit.kkt_residual;
    j["sweeps"] = fit.sweeps;
    return j;
}

void dump_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

int run(int argc, char** argv) {
    CLI::App app{"LASSO with spectral de-biasing, confidence intervals and "
                 "hypothesis tests for rotationally invariant random designs"};
    app.require_subcommand(1);

    // ---- gen ----------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
    std::string g_kind = "gaussian-iid", g_out = "instance";
    double g_gamma = 0.5, g_rho = 0.1, g_sigma2 = 0.02;
    std::optional<double> g_kappa;
    Eigen::Index g_n = 1000;
    std::uint64_t g_seed = 1;
    gen->add_option("--ensemble", g_kind,
                    "gaussian-iid|row-orthogonal|random-dct|geometric")
        ->capture_default_str();
    gen->add_option("--gamma", g_gamma, "measurement ratio M/N")->capture_default_str();
    gen->add_option("--kappa", g_kappa, "peak-to-average ratio (geometric)");
    gen->add_option("--n", g_n, "signal dimension N")->capture_default_str();
    gen->add_option("--rho", g_rho, "signal density")->capture_default_str();
    gen->add_option("--sigma2", g_sigma2, "noise variance")->capture_default_str();
    gen->add_option("--seed", g_seed, "master seed")->capture_default_str();
    gen->add_option("--out", g_out, "output directory")->capture_default_str();

    // ---- fit ----------------------------------------------------------
    auto* fitc = app.add_subcommand("fit", "solve the LASSO at one lambda");
    std::string f_instance, f_out = "fit";
    double f_lambda = 0.1;
    SolverFlags f_solver;
    fitc->add_option("--instance", f_instance, "instance directory")->required();
    fitc->add_option("--lambda", f_lambda, "regularization strength")->required();
    fitc->add_option("--out", f_out, "output directory")->capture_default_str();
    add_solver_flags(fitc, f_solver);

    // ---- infer --------------------------------------------------------
    auto* inferc = app.add_subcommand(
        "infer", "de-biased estimates, confidence intervals and p-values");
    std::string i_instance, i_out = "inference", i_mode = "known";
    double i_lambda = 0.1, i_alpha = 0.05;
    int i_k = 40;
    std::uint64_t i_seed = 1;
    SolverFlags i_solver;
    inferc->add_option("--instance", i_instance, "instance directory")->required();
    inferc->add_option("--lambda", i_lambda, "regularization strength")->required();
    inferc->add_option("--alpha", i_alpha, "CI significance level")
        ->capture_default_str();
    inferc->add_option("--sigma2-mode", i_mode, "known|estimated")
        ->capture_default_str();
    inferc->add_option("--k", i_k, "CV folds for estimated mode")
        ->capture_default_str();
    inferc->add_option("--seed", i_seed, "fold permutation seed")
        ->capture_default_str();
    inferc->add_option("--out", i_out, "output directory")->capture_default_str();
    add_solver_flags(inferc, i_solver);

    // ---- cv -----------------------------------------------------------
    auto* cvc = app.add_subcommand(
        "cv", "K-fold cross-validation and CI-width selection report");
    std::string c_instance, c_out = "selection", c_mode = "known";
    int c_k = 40, c_grid_size = 20;
    double c_min_ratio = 1e-3;
    std::uint64_t c_seed = 1;
    SolverFlags c_solver;
    cvc->add_option("--instance", c_instance, "instance directory")->required();
    cvc->add_option("--k", c_k, "number of folds")->capture_default_str();
    cvc->add_option("--grid-size", c_grid_size, "lambda grid points")
        ->capture_default_str();
    cvc->add_option("--grid-min-ratio", c_min_ratio,
                    "grid floor as a fraction of lambda_max")
        ->capture_default_str();
    cvc->add_option("--sigma2-mode", c_mode, "known|estimated")
        ->capture_default_str();
    cvc->add_option("--seed", c_seed, "fold permutation seed")->capture_default_str();
    cvc->add_option("--out", c_out, "output directory")->capture_default_str();
    add_solver_flags(cvc, c_solver);

    // ---- test ---------------------------------------------------------
    auto* testc = app.add_subcommand(
        "test", "per-coordinate hypothesis tests with FPR/TPR");
    std::string t_instance, t_out = "tests", t_mode = "known";
    double t_lambda = 0.1;
    std::vector<double> t_alphas = {0.01, 0.05, 0.1, 0.2, 0.5};
    int t_k = 40;
    std::uint64_t t_seed = 1;
    SolverFlags t_solver;
    testc->add_option("--instance", t_instance, "instance directory")->required();
    testc->add_option("--lambda", t_lambda, "regularization strength")->required();
    testc->add_option("--alphas", t_alphas, "significance levels (ascending)")
        ->capture_default_str();
    testc->add_option("--sigma2-mode", t_mode, "known|estimated")
        ->capture_default_str();
    testc->add_option("--k", t_k, "CV folds for estimated mode")
        ->capture_default_str();
    testc->add_option("--seed", t_seed, "fold permutation seed")
        ->capture_default_str();
    testc->add_option("--out", t_out, "output directory")->capture_default_str();
    add_solver_flags(testc, t_solver);

    // ---- experiment / figures ------------------------------------------
    auto* expc = app.add_subcommand(
        "experiment", "seeded multi-replication experiment from a JSON config");
    std::string e_config;
    std::string e_outdir;
    expc->add_option("--config", e_config, "config JSON path")->required();
    expc->add_option("--output-dir", e_outdir, "override config output_dir");

    auto* figc = app.add_subcommand(
        "figures", "experiment run emitting only the figure-data CSVs");
    std::string fig_config, fig_outdir;
    figc->add_option("--config", fig_config, "config JSON path")->required();
    figc->add_option("--output-dir", fig_outdir, "override config output_dir");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        EnsembleSpec spec;
        spec.kind = ensemble_kind_from_string(g_kind);
        spec.gamma = g_gamma;
        spec.kappa = g_kappa;
        const ProblemInstance inst = make_instance(spec, g_n, g_rho, g_sigma2, g_seed);
        save_instance(g_out, inst);
        std::cout << "instance written to " << g_out << " (M=" << inst.A.rows()
                  << ", N=" << inst.A.cols() << ")\n";
        return 0;
    }

    if (fitc->parsed()) {
        const ProblemInstance inst = load_instance(f_instance);
        const LassoFit fit = fit_lasso(inst.A, inst.y, f_lambda, f_solver.options());
        fs::create_directories(f_out);
        write_vector_csv(f_out + "/x_hat.csv", fit.x_hat);
        dump_json(f_out + "/fit.json", fit_summary(fit));
        std::cout << "rho_active=" << fit.rho_active << " rss=" << fit.rss
                  << " kkt=" << fit.kkt_residual << '\n';
        return 0;
    }

    auto run_inference = [&](const ProblemInstance& inst, double lambda,
                             const std::string& mode_name, int k,
                             std::uint64_t seed, const SolverOptions& opts,
                             double alpha_sig, LassoFit& fit_out,
                             double& sigma2_used, double& sigma2_hat_out) {
        const Sigma2Mode mode = parse_mode(mode_name);
        fit_out = fit_lasso(inst.A, inst.y, lambda, opts);
        SpectralState state = spectral_state(inst.ensemble, fit_out.rho_active);
        sigma2_hat_out = std::numeric_limits<double>::quiet_NaN();
        if (mode == Sigma2Mode::estimated) {
            const auto grid = default_lambda_grid(inst.A, inst.y, 12, 1e-2);
            sigma2_hat_out = estimated_sigma2(inst, grid, k, seed, opts);
            sigma2_used = sigma2_hat_out;
        } else {
            sigma2_used = inst.sigma2;
        }
        state.chi_hat =
            chi_hat(state, inst.ensemble.gamma, fit_out.rss, sigma2_used);
        return infer(fit_out, inst.A, inst.y, state, alpha_sig);
    };

    if (inferc->parsed()) {
        const ProblemInstance inst = load_instance(i_instance);
        LassoFit fit;
        double sigma2_used = 0.0, sigma2_hat_v = 0.0;
        const InferenceResult inf =
            run_inference(inst, i_lambda, i_mode, i_k, i_seed, i_solver.options(),
                          i_alpha, fit, sigma2_used, sigma2_hat_v);
        const TestOutcome test = hypothesis_test(inf.p_values, i_alpha, inst.x0);
        fs::create_directories(i_out);
        write_inference_csv(i_out + "/coordinates.csv", inst, fit, inf, test);
        json j = fit_summary(fit);
        j["chi"] = fit.rho_active > 0
                       ? spectral_state(inst.ensemble, fit.rho_active).chi
                       : 0.0;
        j["q_hat"] = inf.q_hat;
        j["chi_hat"] = inf.chi_hat;
        j["sigma2_used"] = sigma2_used;
        j["sigma2_hat"] = sigma2_hat_v;
        j["alpha_sig"] = i_alpha;
        j["fpr"] = test.fpr;
        j["tpr"] = test.tpr;
        dump_json(i_out + "/summary.json", j);
        std::cout << "inference written to " << i_out << '\n';
        return 0;
    }

    if (cvc->parsed()) {
        const ProblemInstance inst = load_instance(c_instance);
        const auto grid =
            default_lambda_grid(inst.A, inst.y, c_grid_size, c_min_ratio);
        const SelectionReport report =
            run_selection(inst.A, inst.y, inst.ensemble, grid, c_k, c_seed,
                          parse_mode(c_mode), inst.sigma2, c_solver.options());
        fs::create_directories(c_out);
        {
            std::ofstream out(c_out + "/selection.csv");
            out << "lambda,cv_error,looe,ci_width\n";
            for (std::size_t l = 0; l < grid.size(); ++l)
                out << format_double(report.lambda_grid[l]) << ','
                    << format_double(report.cv_errors[l]) << ','
                    << format_double(report.looe[l]) << ','
                    << format_double(report.ci_width[l]) << '\n';
        }
        json j;
        j["lambda_cv"] = report.lambda_cv;
        j["lambda_ci"] = report.lambda_ci;
        j["sigma2_hat"] = report.sigma2_hat;
        j["lambda_grid"] = report.lambda_grid;
        j["cv_errors"] = report.cv_errors;
        j["looe"] = report.looe;
        j["ci_width"] = report.ci_width;
        dump_json(c_out + "/selection.json", j);
        std::cout << "lambda_cv=" << report.lambda_cv
                  << " lambda_ci=" << report.lambda_ci
                  << " sigma2_hat=" << report.sigma2_hat << '\n';
        return 0;
    }

    if (testc->parsed()) {
        const ProblemInstance inst = load_instance(t_instance);
        LassoFit fit;
        double sigma2_used = 0.0, sigma2_hat_v = 0.0;
        const InferenceResult inf =
            run_inference(inst, t_lambda, t_mode, t_k, t_seed, t_solver.options(),
                          0.05, fit, sigma2_used, sigma2_hat_v);
        fs::create_directories(t_out);
        json rows = json::array();
        for (double a : t_alphas) {
            const TestOutcome outcome = hypothesis_test(inf.p_values, a, inst.x0);
            std::size_t rejections = 0;
            for (bool r : outcome.reject) rejections += r ? 1 : 0;
            json row;
            row["alpha"] = a;
            row["fpr"] = outcome.fpr;
            row["tpr"] = outcome.tpr;
            row["rejections"] = rejections;
            rows.push_back(row);
        }
        json j;
        j["lambda"] = t_lambda;
        j["sigma2_used"] = sigma2_used;
        j["outcomes"] = rows;
        dump_json(t_out + "/tests.json", j);
        std::cout << "test outcomes written to " << t_out << '\n';
        return 0;
    }

    if (expc->parsed() || figc->parsed()) {
        const bool figures_only = figc->parsed();
        ExperimentConfig cfg =
            load_config(figures_only ? fig_config : e_config);
        const std::string& override_dir = figures_only ? fig_outdir : e_outdir;
        if (!override_dir.empty()) cfg.output_dir = override_dir;
        if (figures_only) cfg.write_replication_csv = false;
        const ExperimentSummary summary = run_experiment(cfg);
        std::cout << "experiment complete: lambda_star=" << summary.lambda_star
                  << " coverage=" << summary.coverage << " outputs in "
                  << cfg.output_dir << '\n';
        return 0;
    }

    return 0;
}

}  // namespace

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "parameter";
    if (dynamic_cast<const std::domain_error*>(&e)) return "domain";
    if (dynamic_cast<const LassoConvergenceError*>(&e)) return "convergence";
    return "runtime";
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        json err;
        err["error"]["type"] = error_kind(e);
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << '\n';
        return 1;
    }
}
