#include "lassotap/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lassotap/rng.hpp"

namespace lassotap {

namespace {

// Ties break toward the larger lambda: the grid is descending, so the first
// strict improvement wins.
std::size_t argmin_descending(const std::vector<double>& values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

}  // namespace

CvResult kfold_cv(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                  const std::vector<double>& lambda_grid, int k,
                  std::uint64_t seed, const SolverOptions& options) {
    const Eigen::Index m = A.rows();
    if (k < 2) throw std::invalid_argument("kfold_cv: k must be >= 2");
    if (static_cast<Eigen::Index>(k) > m)
        throw std::invalid_argument("kfold_cv: fold smaller than one row");
    if (lambda_grid.empty())
        throw std::invalid_argument("kfold_cv: empty lambda grid");

    // Seeded permutation, contiguous blocks of near-equal size.
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    auto rng = make_rng(seed, Stream::folds);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<double> cv_errors(lambda_grid.size(), 0.0);
    std::size_t offset = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t fold_size = static_cast<std::size_t>(m) / k +
                                      (f < static_cast<int>(m % k) ? 1 : 0);
        std::vector<Eigen::Index> hold(perm.begin() + offset,
                                       perm.begin() + offset + fold_size);
        offset += fold_size;

        const Eigen::Index train_rows = m - static_cast<Eigen::Index>(fold_size);
        Eigen::MatrixXd At(train_rows, A.cols());
        Eigen::VectorXd yt(train_rows);
        std::vector<bool> held(static_cast<std::size_t>(m), false);
        for (Eigen::Index i : hold) held[static_cast<std::size_t>(i)] = true;
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (held[static_cast<std::size_t>(i)]) continue;
            At.row(r) = A.row(i);
            yt[r] = y[i];
            ++r;
        }

        const auto path = fit_path(At, yt, lambda_grid, options);
        for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
            double se = 0.0;
            for (Eigen::Index i : hold) {
                const double e = y[i] - A.row(i).dot(path[l].x_hat);
                se += e * e;
            }
            cv_errors[l] += se / static_cast<double>(fold_size);
        }
    }
    for (double& e : cv_errors) e /= static_cast<double>(k);

    CvResult res;
    res.cv_errors = std::move(cv_errors);
    res.lambda_cv = lambda_grid[argmin_descending(res.cv_errors)];
    return res;
}

double estimate_sigma2(const LassoFit& fit, const Eigen::MatrixXd& A,
                       const Eigen::VectorXd& y) {
    const double m = static_cast<double>(A.rows());
    const double n = static_cast<double>(A.cols());
    const double denom = m - n * fit.rho_active;
    if (!(denom > 0.0))
        throw std::domain_error(
            "estimate_sigma2: M - N rho_active <= 0 (saturated support)");
    return (y - A * fit.x_hat).squaredNorm() / denom;
}

double looe(const LassoFit& fit, const SpectralState& state, double gamma) {
    if (!(fit.rho_active < gamma))
        throw std::domain_error("looe: rho_active >= gamma is degenerate");
    const double via_rho = std::pow(1.0 - fit.rho_active / gamma, -2.0) * fit.rss;
    // Equivalent through 2 chi G' = rho_active; guards state/fit consistency.
    const double via_state =
        std::pow(1.0 - 2.0 * state.chi * state.g1 / gamma, -2.0) * fit.rss;
    if (std::abs(via_rho - via_state) > 1e-10 * std::max(1.0, std::abs(via_rho))) {
        std::ostringstream msg;
        msg << "looe: route disagreement " << via_rho << " vs " << via_state;
        throw std::runtime_error(msg.str());
    }
    return via_rho;
}

double select_by_ci_width(const std::vector<double>& lambda_grid,
                          const std::vector<double>& criterion) {
    if (lambda_grid.size() < 2)
        throw std::invalid_argument("select_by_ci_width: need >= 2 grid points");
    if (lambda_grid.size() != criterion.size())
        throw std::invalid_argument("select_by_ci_width: length mismatch");
    return lambda_grid[argmin_descending(criterion)];
}

std::vector<double> default_lambda_grid(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& y, int size,
                                        double min_ratio) {
    if (size < 2) throw std::invalid_argument("default_lambda_grid: size >= 2");
    if (!(min_ratio > 0.0 && min_ratio < 1.0))
        throw std::invalid_argument("default_lambda_grid: min_ratio in (0, 1)");
    const double lmax = lambda_max(A, y);
    if (!(lmax > 0.0))
        throw std::invalid_argument("default_lambda_grid: A^T y vanishes");
    std::vector<double> grid(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i)
        grid[static_cast<std::size_t>(i)] =
            lmax * std::pow(min_ratio, static_cast<double>(i) / (size - 1));
    return grid;
}

SelectionReport run_selection(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& y,
                              const EnsembleSpec& spec,
                              const std::vector<double>& lambda_grid, int k,
                              std::uint64_t seed, Sigma2Mode mode,
                              double sigma2_known,
                              const SolverOptions& options) {
    SelectionReport report;
    report.lambda_grid = lambda_grid;

    const CvResult cv = kfold_cv(A, y, lambda_grid, k, seed, options);
    report.cv_errors = cv.cv_errors;
    report.lambda_cv = cv.lambda_cv;

    const auto path = fit_path(A, y, lambda_grid, options);
    const auto cv_idx = static_cast<std::size_t>(
        std::find(lambda_grid.begin(), lambda_grid.end(), cv.lambda_cv) -
        lambda_grid.begin());
    report.sigma2_hat = estimate_sigma2(path[cv_idx], A, y);
    const double sigma2_used =
        mode == Sigma2Mode::known ? sigma2_known : report.sigma2_hat;

    const double gamma = spec.gamma;
    const double inf = std::numeric_limits<double>::infinity();
    report.looe.resize(lambda_grid.size());
    report.ci_width.resize(lambda_grid.size());
    for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
        const LassoFit& fit = path[l];
        if (!(fit.rho_active < gamma)) {
            report.looe[l] = inf;  // saturated support, state undefined
            report.ci_width[l] = inf;
            continue;
        }
        const SpectralState state = spectral_state(spec, fit.rho_active);
        const double ch = chi_hat(state, gamma, fit.rss, sigma2_used);
        report.ci_width[l] = ch / (state.q_hat * state.q_hat);
        report.looe[l] = looe(fit, state, gamma);
    }
    report.lambda_ci = select_by_ci_width(lambda_grid, report.ci_width);
    return report;
}

}  // namespace lassotap
