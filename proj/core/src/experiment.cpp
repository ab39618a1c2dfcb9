#include "lassotap/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lassotap/io.hpp"
#include "lassotap/parallel.hpp"
#include "lassotap/rng.hpp"
#include "lassotap/stats.hpp"

namespace lassotap {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::Index ExperimentConfig::m() const {
    return static_cast<Eigen::Index>(
        std::llround(ensemble.gamma * static_cast<double>(n)));
}

void ExperimentConfig::validate() const {
    ensemble.validate();
    if (n < 2) throw std::invalid_argument("config: n must be >= 2");
    if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("config: rho must lie in [0, 1)");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("config: sigma2 >= 0");
    if (lambda_grid.empty())
        throw std::invalid_argument("config: lambda or lambda_grid required");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > 0.0))
            throw std::invalid_argument("config: lambdas must be > 0");
        if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1]))
            throw std::invalid_argument("config: lambda_grid must be descending");
    }
    if (n_replications < 1)
        throw std::invalid_argument("config: n_replications >= 1");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0))
            throw std::invalid_argument("config: alphas must lie in (0, 1)");
        if (i > 0 && !(alphas[i] > alphas[i - 1]))
            throw std::invalid_argument("config: alphas must be ascending");
    }
    if (!(alpha_sig > 0.0 && alpha_sig < 1.0))
        throw std::invalid_argument("config: alpha_sig in (0, 1)");
    if (workers < 0) throw std::invalid_argument("config: workers >= 0");
    if (cv_folds < 2) throw std::invalid_argument("config: cv_folds >= 2");
    if (cv_grid_size < 2) throw std::invalid_argument("config: cv_grid_size >= 2");
    if (!(cv_grid_min_ratio > 0.0 && cv_grid_min_ratio < 1.0))
        throw std::invalid_argument("config: cv_grid_min_ratio in (0, 1)");
    if (!(solver.tolerance > 0.0))
        throw std::invalid_argument("config: solver.tolerance > 0");
    if (solver.max_iter < 1)
        throw std::invalid_argument("config: solver.max_iter >= 1");
    if (output_dir.empty())
        throw std::invalid_argument("config: output_dir required");
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    const auto& ens = j.at("ensemble");
    c.ensemble.kind = ensemble_kind_from_string(ens.at("kind"));
    c.ensemble.gamma = ens.at("gamma");
    if (ens.contains("kappa")) c.ensemble.kappa = ens.at("kappa").get<double>();
    c.n = j.at("n");
    c.rho = j.at("rho");
    c.sigma2 = j.at("sigma2");
    if (j.contains("sigma2_mode")) {
        const std::string mode = j.at("sigma2_mode");
        if (mode == "known")
            c.sigma2_mode = Sigma2Mode::known;
        else if (mode == "estimated")
            c.sigma2_mode = Sigma2Mode::estimated;
        else
            throw std::invalid_argument("config: sigma2_mode must be known|estimated");
    }
    if (j.contains("lambda") && j.contains("lambda_grid"))
        throw std::invalid_argument("config: give lambda or lambda_grid, not both");
    if (j.contains("lambda"))
        c.lambda_grid = {j.at("lambda").get<double>()};
    else if (j.contains("lambda_grid"))
        c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
    c.n_replications = j.at("n_replications");
    c.seed = j.at("seed");
    if (j.contains("alphas")) c.alphas = j.at("alphas").get<std::vector<double>>();
    if (j.contains("alpha_sig")) c.alpha_sig = j.at("alpha_sig");
    c.output_dir = j.at("output_dir");
    if (j.contains("workers")) c.workers = j.at("workers");
    if (j.contains("cv_folds")) c.cv_folds = j.at("cv_folds");
    if (j.contains("cv_grid_size")) c.cv_grid_size = j.at("cv_grid_size");
    if (j.contains("cv_grid_min_ratio")) c.cv_grid_min_ratio = j.at("cv_grid_min_ratio");
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        if (s.contains("tolerance")) c.solver.tolerance = s.at("tolerance");
        if (s.contains("max_iter")) c.solver.max_iter = s.at("max_iter");
    }
    if (j.contains("write_replication_csv"))
        c.write_replication_csv = j.at("write_replication_csv");
    c.validate();
    return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
    json j;
    j["ensemble"]["kind"] = to_string(c.ensemble.kind);
    j["ensemble"]["gamma"] = c.ensemble.gamma;
    if (c.ensemble.kappa.has_value()) j["ensemble"]["kappa"] = *c.ensemble.kappa;
    j["n"] = c.n;
    j["rho"] = c.rho;
    j["sigma2"] = c.sigma2;
    j["sigma2_mode"] = c.sigma2_mode == Sigma2Mode::known ? "known" : "estimated";
    j["lambda_grid"] = c.lambda_grid;
    j["n_replications"] = c.n_replications;
    j["seed"] = c.seed;
    j["alphas"] = c.alphas;
    j["alpha_sig"] = c.alpha_sig;
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    j["cv_folds"] = c.cv_folds;
    j["cv_grid_size"] = c.cv_grid_size;
    j["cv_grid_min_ratio"] = c.cv_grid_min_ratio;
    j["solver"]["tolerance"] = c.solver.tolerance;
    j["solver"]["max_iter"] = c.solver.max_iter;
    j["write_replication_csv"] = c.write_replication_csv;
    return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense significance grid for the test-based ROC figure.
std::vector<double> roc_alpha_grid() {
    std::vector<double> grid = {1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3};
    for (int i = 1; i <= 99; ++i) grid.push_back(0.01 * i);
    return grid;
}

struct ReplicationWork {
    ReplicationRecord record;
    Eigen::MatrixXd coords;                   // per-coordinate CSV payload
    std::vector<double> standardized_fields;  // only kept for replication 0
};

ReplicationWork run_replication(const ExperimentConfig& cfg,
                                const Eigen::VectorXd& x0, int rep,
                                int forced_star_index) {
    const double gamma = cfg.ensemble.gamma;
    ReplicationWork work;
    ReplicationRecord& rec = work.record;
    rec.index = rep;
    rec.matrix_seed = substream_seed(cfg.seed, Stream::matrix,
                                     static_cast<std::uint64_t>(rep));
    rec.noise_seed = substream_seed(cfg.seed, Stream::noise,
                                    static_cast<std::uint64_t>(rep));

    const Eigen::MatrixXd A =
        generate_matrix(cfg.ensemble, cfg.m(), cfg.n, rec.matrix_seed);
    auto [y, xi] = observe(A, x0, cfg.sigma2, rec.noise_seed);

    const auto path = fit_path(A, y, cfg.lambda_grid, cfg.solver);

    rec.sigma2_hat = kNaN;
    if (cfg.sigma2_mode == Sigma2Mode::estimated) {
        const std::vector<double> cv_grid =
            cfg.lambda_grid.size() >= 2
                ? cfg.lambda_grid
                : default_lambda_grid(A, y, cfg.cv_grid_size, cfg.cv_grid_min_ratio);
        const CvResult cv =
            kfold_cv(A, y, cv_grid, cfg.cv_folds,
                     substream_seed(cfg.seed, Stream::folds,
                                    static_cast<std::uint64_t>(rep)),
                     cfg.solver);
        const LassoFit fit_cv = fit_lasso(A, y, cv.lambda_cv, cfg.solver);
        rec.sigma2_hat = estimate_sigma2(fit_cv, A, y);
        rec.sigma2_used = rec.sigma2_hat;
    } else {
        rec.sigma2_used = cfg.sigma2;
    }

    const Eigen::Index n = cfg.n;
    rec.per_lambda.resize(cfg.lambda_grid.size());
    std::vector<SpectralState> states(cfg.lambda_grid.size());
    for (std::size_t l = 0; l < cfg.lambda_grid.size(); ++l) {
        LambdaStats& st = rec.per_lambda[l];
        const LassoFit& fit = path[l];
        st.lambda = fit.lambda;
        st.rho_active = fit.rho_active;
        st.rss = fit.rss;
        if (!(fit.rho_active < gamma)) {
            st.degenerate = true;
            st.chi = st.q_hat = st.chi_hat = st.criterion = st.looe = kInf;
            st.mean_h_centered = st.var_h_centered = kNaN;
            st.mean_debias_err = st.var_debias_err = kNaN;
            continue;
        }
        const SpectralState state = spectral_state(cfg.ensemble, fit.rho_active);
        states[l] = state;
        st.chi = state.chi;
        st.q_hat = state.q_hat;
        st.chi_hat = chi_hat(state, gamma, fit.rss, rec.sigma2_used);
        st.looe = looe(fit, state, gamma);

        const Eigen::VectorXd h = local_fields(fit, A, y, state.q_hat);
        const Eigen::VectorXd hc = h - state.q_hat * x0;
        const Eigen::VectorXd derr = h / state.q_hat - x0;
        st.mean_h_centered = hc.mean();
        st.var_h_centered = sample_variance(hc);
        st.mean_debias_err = derr.mean();
        st.var_debias_err = sample_variance(derr);
        // CI-width criterion; the geometric ensemble scores the empirical
        // variance of the de-biased error instead (ground truth available).
        st.criterion = cfg.ensemble.kind == EnsembleKind::geometric
                           ? st.var_debias_err
                           : st.chi_hat / (st.q_hat * st.q_hat);
    }

    // Report lambda: forced (from replication 0) or per-replication argmin of
    // the criterion, ties toward larger lambda.
    int star = forced_star_index;
    if (star < 0) {
        star = 0;
        for (std::size_t l = 1; l < rec.per_lambda.size(); ++l)
            if (rec.per_lambda[l].criterion < rec.per_lambda[star].criterion)
                star = static_cast<int>(l);
    }
    rec.lambda_star_index = star;
    const LambdaStats& st = rec.per_lambda[static_cast<std::size_t>(star)];
    if (st.degenerate)
        throw std::runtime_error(
            "run_experiment: report lambda has saturated support; raise the grid floor");

    const LassoFit& fit = path[static_cast<std::size_t>(star)];
    SpectralState state = states[static_cast<std::size_t>(star)];
    state.chi_hat = st.chi_hat;
    const InferenceResult inf = infer(fit, A, y, state, cfg.alpha_sig);
    const TestOutcome at_sig = hypothesis_test(inf.p_values, cfg.alpha_sig, x0);

    rec.fpr_at_alpha.reserve(cfg.alphas.size());
    rec.tpr_at_alpha.reserve(cfg.alphas.size());
    for (double a : cfg.alphas) {
        const TestOutcome t = hypothesis_test(inf.p_values, a, x0);
        rec.fpr_at_alpha.push_back(t.fpr);
        rec.tpr_at_alpha.push_back(t.tpr);
    }
    Eigen::Index covered = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (inf.ci_lo[i] <= x0[i] && x0[i] <= inf.ci_hi[i]) ++covered;
    rec.coverage = static_cast<double>(covered) / static_cast<double>(n);
    rec.roc_test = roc_curve(inf.p_values, x0, roc_alpha_grid());
    rec.roc_lasso = lasso_roc(path, x0);

    if (cfg.write_replication_csv) {
        work.coords.resize(n, 7);
        for (Eigen::Index i = 0; i < n; ++i) {
            work.coords(i, 0) = fit.x_hat[i];
            work.coords(i, 1) = inf.h[i];
            work.coords(i, 2) = inf.x_debiased[i];
            work.coords(i, 3) = inf.ci_lo[i];
            work.coords(i, 4) = inf.ci_hi[i];
            work.coords(i, 5) = inf.p_values[i];
            work.coords(i, 6) = at_sig.reject[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        }
    }
    if (rep == 0) {
        const double sd = std::sqrt(st.chi_hat);
        work.standardized_fields.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
            work.standardized_fields[static_cast<std::size_t>(i)] =
                (inf.h[i] - st.q_hat * x0[i]) / sd;
        std::sort(work.standardized_fields.begin(), work.standardized_fields.end());
    }
    return work;
}

void write_replication_file(const std::string& dir, const Eigen::VectorXd& x0,
                            const ReplicationWork& work) {
    std::ostringstream name;
    name << dir << "/rep_";
    name.fill('0');
    name.width(5);
    name << work.record.index;
    name << ".csv";
    std::ofstream out(name.str());
    if (!out) throw std::runtime_error("cannot write " + name.str());
    out << "index,x0,x_lasso,h,x_debiased,ci_lo,ci_hi,p_value,reject\n";
    for (Eigen::Index i = 0; i < work.coords.rows(); ++i) {
        out << i << ',' << format_double(x0[i]);
        for (Eigen::Index c = 0; c < 6; ++c)
            out << ',' << format_double(work.coords(i, c));
        out << ',' << static_cast<int>(work.coords(i, 6)) << '\n';
    }
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    fs::create_directories(cfg.output_dir + "/figures");
    if (cfg.write_replication_csv)
        fs::create_directories(cfg.output_dir + "/replications");

    const Eigen::VectorXd x0 =
        generate_signal(cfg.n, cfg.rho, substream_seed(cfg.seed, Stream::signal));

    const int ns = cfg.n_replications;
    std::vector<ReplicationWork> works(static_cast<std::size_t>(ns));

    // Replication 0 runs first and pins the report lambda for the rest.
    works[0] = run_replication(cfg, x0, 0, cfg.lambda_grid.size() == 1 ? 0 : -1);
    const int star = works[0].record.lambda_star_index;
    parallel_for(ns - 1, cfg.workers, [&](int i) {
        const int rep = i + 1;
        try {
            works[static_cast<std::size_t>(rep)] = run_replication(cfg, x0, rep, star);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "replication " << rep << " (matrix_seed="
                << substream_seed(cfg.seed, Stream::matrix,
                                  static_cast<std::uint64_t>(rep))
                << ", noise_seed="
                << substream_seed(cfg.seed, Stream::noise,
                                  static_cast<std::uint64_t>(rep))
                << ") failed: " << e.what();
            throw std::runtime_error(msg.str());
        }
    });

    ExperimentSummary summary;
    summary.config = cfg;
    summary.lambda_star_index = star;
    summary.lambda_star = cfg.lambda_grid[static_cast<std::size_t>(star)];

    const std::size_t nl = cfg.lambda_grid.size();
    summary.lambda_means.resize(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        LambdaStats mean{};
        mean.lambda = cfg.lambda_grid[l];
        for (const auto& w : works) {
            const LambdaStats& st = w.record.per_lambda[l];
            mean.rho_active += st.rho_active;
            mean.rss += st.rss;
            mean.degenerate = mean.degenerate || st.degenerate;
            mean.chi += st.chi;
            mean.q_hat += st.q_hat;
            mean.chi_hat += st.chi_hat;
            mean.criterion += st.criterion;
            mean.looe += st.looe;
            mean.mean_h_centered += st.mean_h_centered;
            mean.var_h_centered += st.var_h_centered;
            mean.mean_debias_err += st.mean_debias_err;
            mean.var_debias_err += st.var_debias_err;
        }
        const double d = static_cast<double>(ns);
        mean.rho_active /= d;
        mean.rss /= d;
        mean.chi /= d;
        mean.q_hat /= d;
        mean.chi_hat /= d;
        mean.criterion /= d;
        mean.looe /= d;
        mean.mean_h_centered /= d;
        mean.var_h_centered /= d;
        mean.mean_debias_err /= d;
        mean.var_debias_err /= d;
        summary.lambda_means[l] = mean;
    }

    summary.fpr_at_alpha.assign(cfg.alphas.size(), 0.0);
    summary.tpr_at_alpha.assign(cfg.alphas.size(), 0.0);
    summary.coverage = 0.0;
    summary.sigma2_hat_mean = 0.0;
    for (const auto& w : works) {
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            summary.fpr_at_alpha[a] += w.record.fpr_at_alpha[a];
            summary.tpr_at_alpha[a] += w.record.tpr_at_alpha[a];
        }
        summary.coverage += w.record.coverage;
        summary.sigma2_hat_mean += w.record.sigma2_hat;
    }
    for (auto& v : summary.fpr_at_alpha) v /= ns;
    for (auto& v : summary.tpr_at_alpha) v /= ns;
    summary.coverage /= ns;
    summary.sigma2_hat_mean /= ns;

    // ----- persisted outputs -----
    const std::string dir = cfg.output_dir;
    {
        std::ofstream out(dir + "/config.json");
        out << config_to_json_text(cfg);
    }
    if (cfg.write_replication_csv)
        for (const auto& w : works)
            write_replication_file(dir + "/replications", x0, w);

    {
        std::ofstream out(dir + "/records.csv");
        out << "index,matrix_seed,noise_seed,lambda_star,rho_active,rss,chi,q_hat,"
               "chi_hat,sigma2_used,sigma2_hat,coverage";
        for (double a : cfg.alphas) out << ",fpr_at_" << format_double(a);
        for (double a : cfg.alphas) out << ",tpr_at_" << format_double(a);
        out << '\n';
        for (const auto& w : works) {
            const auto& r = w.record;
            const auto& st = r.per_lambda[static_cast<std::size_t>(r.lambda_star_index)];
            out << r.index << ',' << r.matrix_seed << ',' << r.noise_seed << ','
                << format_double(st.lambda) << ',' << format_double(st.rho_active)
                << ',' << format_double(st.rss) << ',' << format_double(st.chi)
                << ',' << format_double(st.q_hat) << ',' << format_double(st.chi_hat)
                << ',' << format_double(r.sigma2_used) << ','
                << format_double(r.sigma2_hat) << ',' << format_double(r.coverage);
            for (double v : r.fpr_at_alpha) out << ',' << format_double(v);
            for (double v : r.tpr_at_alpha) out << ',' << format_double(v);
            out << '\n';
        }
    }

    {
        std::ofstream out(dir + "/figures/qq.csv");
        out << "theoretical,empirical\n";
        const auto& sf = works[0].standardized_fields;
        const auto nq = static_cast<double>(sf.size());
        for (std::size_t i = 0; i < sf.size(); ++i)
            out << format_double(
                       normal_quantile((static_cast<double>(i) + 0.5) / nq))
                << ',' << format_double(sf[i]) << '\n';
    }
    {
        std::ofstream out(dir + "/figures/bias_variance_vs_lambda.csv");
        out << "lambda,rho_active,rss,mean_h_centered,var_h_centered,chi_hat,"
               "mean_debias_err,var_debias_err,ci_var_pred\n";
        for (const auto& st : summary.lambda_means)
            out << format_double(st.lambda) << ',' << format_double(st.rho_active)
                << ',' << format_double(st.rss) << ','
                << format_double(st.mean_h_centered) << ','
                << format_double(st.var_h_centered) << ','
                << format_double(st.chi_hat) << ','
                << format_double(st.mean_debias_err) << ','
                << format_double(st.var_debias_err) << ','
                << format_double(st.chi_hat / (st.q_hat * st.q_hat)) << '\n';
    }
    {
        std::ofstream out(dir + "/figures/fpr_vs_alpha.csv");
        out << "alpha,fpr,tpr\n";
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a)
            out << format_double(cfg.alphas[a]) << ','
                << format_double(summary.fpr_at_alpha[a]) << ','
                << format_double(summary.tpr_at_alpha[a]) << '\n';
    }
    {
        std::ofstream out(dir + "/figures/roc.csv");
        out << "method,param,fpr,tpr\n";
        const std::size_t nt = works[0].record.roc_test.size();
        for (std::size_t p = 0; p < nt; ++p) {
            double fpr = 0.0, tpr = 0.0;
            for (const auto& w : works) {
                fpr += w.record.roc_test[p].fpr;
                tpr += w.record.roc_test[p].tpr;
            }
            out << "test," << format_double(works[0].record.roc_test[p].param)
                << ',' << format_double(fpr / ns) << ',' << format_double(tpr / ns)
                << '\n';
        }
        const std::size_t np = works[0].record.roc_lasso.size();
        for (std::size_t p = 0; p < np; ++p) {
            double fpr = 0.0, tpr = 0.0;
            for (const auto& w : works) {
                fpr += w.record.roc_lasso[p].fpr;
                tpr += w.record.roc_lasso[p].tpr;
            }
            out << "lasso," << format_double(works[0].record.roc_lasso[p].param)
                << ',' << format_double(fpr / ns) << ',' << format_double(tpr / ns)
                << '\n';
        }
    }
    {
        std::ofstream out(dir + "/figures/ci_width_vs_lambda.csv");
        out << "lambda,criterion,looe\n";
        for (const auto& st : summary.lambda_means)
            out << format_double(st.lambda) << ',' << format_double(st.criterion)
                << ',' << format_double(st.looe) << '\n';
    }
    {
        json j;
        j["lambda_star"] = summary.lambda_star;
        j["lambda_star_index"] = summary.lambda_star_index;
        j["coverage"] = summary.coverage;
        j["sigma2_hat_mean"] = summary.sigma2_hat_mean;
        j["n_replications"] = ns;
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            j["fpr_at_alpha"][format_double(cfg.alphas[a])] = summary.fpr_at_alpha[a];
            j["tpr_at_alpha"][format_double(cfg.alphas[a])] = summary.tpr_at_alpha[a];
        }
        for (const auto& st : summary.lambda_means) {
            json row;
            row["lambda"] = st.lambda;
            row["rho_active"] = st.rho_active;
            row["rss"] = st.rss;
            row["chi"] = st.chi;
            row["q_hat"] = st.q_hat;
            row["chi_hat"] = st.chi_hat;
            row["criterion"] = st.criterion;
            row["looe"] = st.looe;
            j["per_lambda"].push_back(row);
        }
        j["config"] = json::parse(config_to_json_text(cfg));
        std::ofstream out(dir + "/summary.json");
        out << j.dump(2) << '\n';
    }

    summary.records.reserve(works.size());
    for (auto& w : works) summary.records.push_back(std::move(w.record));
    return summary;
}

}  // namespace lassotap
