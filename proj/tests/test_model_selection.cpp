#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lassotap/model_selection.hpp"
#include "oracles.hpp"

using namespace lassotap;

namespace {

EnsembleSpec make_spec(EnsembleKind kind, double gamma, double kappa = 0.0) {
    EnsembleSpec spec;
    spec.kind = kind;
    spec.gamma = gamma;
    if (kind == EnsembleKind::geometric) spec.kappa = kappa;
    return spec;
}

}  // namespace

TEST_CASE("kfold_cv: null model scores the held-out second moment") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 48, 0.2, 0.05, 31);
    // With equal fold sizes the across-fold mean of mean(y_fold^2) equals the
    // overall mean(y^2) regardless of the partition; M = 24, k = 4.
    double big = lambda_max(inst.A, inst.y);
    const CvResult cv = kfold_cv(inst.A, inst.y, {10.0 * big + 1.0}, 4, 7);
    const double expected = inst.y.squaredNorm() / static_cast<double>(inst.y.size());
    CHECK(cv.cv_errors[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("kfold_cv: noiseless orthonormal design selects the smallest lambda") {
    // Full random-DCT design: A^T A = I, zero noise, so prediction improves
    // monotonically as the penalty shrinks.
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::random_dct, 1.0), 48, 0.25, 0.0, 13);
    const auto grid = default_lambda_grid(inst.A, inst.y, 5, 1e-2);
    const CvResult cv = kfold_cv(inst.A, inst.y, grid, 4, 3);
    CHECK(cv.lambda_cv == grid.back());
    for (std::size_t l = 1; l < grid.size(); ++l)
        CHECK(cv.cv_errors[l] <= cv.cv_errors[l - 1] + 1e-12);
}

TEST_CASE("kfold_cv: K = M agrees with explicit leave-one-out refits (1e-10)") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 24, 0.2, 0.02, 41);
    const Eigen::Index m = inst.A.rows();
    const std::vector<double> grid = {0.4, 0.2, 0.1};
    const CvResult cv =
        kfold_cv(inst.A, inst.y, grid, static_cast<int>(m), 5);

    // Oracle: drop each row in turn, refit the whole grid, score the row.
    // (Same warm-started path as the fold fits, so agreement is exact and the
    // check isolates the partitioning and scoring logic.)
    std::vector<double> loo(grid.size(), 0.0);
    for (Eigen::Index drop = 0; drop < m; ++drop) {
        Eigen::MatrixXd At(m - 1, inst.A.cols());
        Eigen::VectorXd yt(m - 1);
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i == drop) continue;
            At.row(r) = inst.A.row(i);
            yt[r] = inst.y[i];
            ++r;
        }
        const auto refits = fit_path(At, yt, grid);
        for (std::size_t l = 0; l < grid.size(); ++l) {
            const double e = inst.y[drop] - inst.A.row(drop).dot(refits[l].x_hat);
            loo[l] += e * e;
        }
    }
    for (std::size_t l = 0; l < grid.size(); ++l)
        CHECK(cv.cv_errors[l] ==
              doctest::Approx(loo[l] / static_cast<double>(m)).epsilon(1e-10));
}

TEST_CASE("kfold_cv: parameter errors") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 20, 0.2, 0.02, 2);
    CHECK_THROWS_AS(kfold_cv(inst.A, inst.y, {0.1}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(kfold_cv(inst.A, inst.y, {0.1}, 11, 1), std::invalid_argument);
    CHECK_THROWS_AS(kfold_cv(inst.A, inst.y, {}, 2, 1), std::invalid_argument);
}

TEST_CASE("estimate_sigma2: pinned arithmetic") {
    // Zero residual.
    const ProblemInstance noiseless =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 40, 0.2, 0.0, 3);
    LassoFit exact;
    exact.x_hat = noiseless.x0;
    exact.rho_active = active_density(noiseless.x0);
    CHECK(estimate_sigma2(exact, noiseless.A, noiseless.y) == 0.0);

    // Direct substitution: M = 50, N = 100, rho_active = 0.25, ||r||^2 = 0.5.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(50, 100);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(50);
    y[0] = std::sqrt(0.5);
    LassoFit fit;
    fit.x_hat = Eigen::VectorXd::Zero(100);
    fit.rho_active = 0.25;
    CHECK(estimate_sigma2(fit, A, y) == doctest::Approx(0.02).epsilon(1e-14));

    fit.rho_active = 0.5;  // M - N rho_active = 0
    CHECK_THROWS_AS(estimate_sigma2(fit, A, y), std::domain_error);
}

TEST_CASE("estimate_sigma2: tracks sigma2 = 0.02 in most seeds (Monte Carlo)") {
    // Sanity-scale run; the +-20% claim at N = 2000 lives in the acceptance
    // suite.
    int hits = 0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        const ProblemInstance inst = make_instance(
            make_spec(EnsembleKind::gaussian_iid, 0.5), 500, 0.1, 0.02,
            9000 + static_cast<std::uint64_t>(s));
        const auto grid = default_lambda_grid(inst.A, inst.y, 15, 3e-2);
        const CvResult cv = kfold_cv(inst.A, inst.y, grid, 8,
                                     100 + static_cast<std::uint64_t>(s));
        const LassoFit fit = fit_lasso(inst.A, inst.y, cv.lambda_cv);
        const double est = estimate_sigma2(fit, inst.A, inst.y);
        if (est > 0.01 && est < 0.03) ++hits;
    }
    CHECK(hits >= 8);
}

TEST_CASE("looe: pinned values and degenerate guard") {
    LassoFit fit;
    fit.rss = 0.37;
    fit.rho_active = 0.0;
    const SpectralState s0 = spectral_state(make_spec(EnsembleKind::gaussian_iid, 0.5), 0.0);
    CHECK(looe(fit, s0, 0.5) == doctest::Approx(0.37).epsilon(1e-14));

    fit.rss = 0.1;
    fit.rho_active = 0.25;
    const SpectralState s =
        spectral_state(make_spec(EnsembleKind::gaussian_iid, 0.5), 0.25);
    CHECK(looe(fit, s, 0.5) == doctest::Approx(0.4).epsilon(1e-10));

    fit.rho_active = 0.5;
    CHECK_THROWS_AS(looe(fit, s, 0.5), std::domain_error);
}

TEST_CASE("looe: explicit leave-one-out refits agree within 15% at M = 40") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 80, 0.1, 0.02, 57);
    const Eigen::Index m = inst.A.rows();
    const double lambda = 0.25 * lambda_max(inst.A, inst.y);
    const LassoFit fit = fit_lasso(inst.A, inst.y, lambda);
    const SpectralState state = spectral_state(inst.ensemble, fit.rho_active);
    const double analytic = looe(fit, state, inst.ensemble.gamma);

    double refit = 0.0;
    for (Eigen::Index drop = 0; drop < m; ++drop) {
        Eigen::MatrixXd At(m - 1, inst.A.cols());
        Eigen::VectorXd yt(m - 1);
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i == drop) continue;
            At.row(r) = inst.A.row(i);
            yt[r] = inst.y[i];
            ++r;
        }
        const LassoFit f = fit_lasso(At, yt, lambda);
        const double e = inst.y[drop] - inst.A.row(drop).dot(f.x_hat);
        refit += e * e;
    }
    refit /= static_cast<double>(m);
    CHECK(std::abs(analytic - refit) / refit < 0.15);
}

TEST_CASE("select_by_ci_width: interior argmin and tie-breaking") {
    const std::vector<double> grid = {1.0, 0.5, 0.25, 0.125, 0.0625};
    CHECK(select_by_ci_width(grid, {5.0, 2.0, 1.0, 2.0, 5.0}) == 0.25);
    // ties resolve toward the larger lambda
    CHECK(select_by_ci_width(grid, {2.0, 1.0, 1.0, 1.0, 2.0}) == 0.5);
    CHECK_THROWS_AS(select_by_ci_width({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(select_by_ci_width(grid, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("Eq-style identities: chi_hat/q_hat^2 vs looe, per lambda") {
    // gaussian-iid: chi_hat/q_hat^2 == C/gamma; row-orthogonal and random-dct:
    // chi_hat/q_hat^2 == (1-gamma)/gamma C + sigma2.  Checked per lambda with
    // shared inputs at 1e-10, plus argmin invariance.
    const double gamma = 0.5, sigma2 = 0.02;
    for (auto kind : {EnsembleKind::gaussian_iid, EnsembleKind::row_orthogonal,
                      EnsembleKind::random_dct}) {
        const ProblemInstance inst =
            make_instance(make_spec(kind, gamma), 240, 0.1, sigma2, 71);
        const auto grid = default_lambda_grid(inst.A, inst.y, 8, 5e-2);
        const auto path = fit_path(inst.A, inst.y, grid);
        std::vector<double> width, c_over;
        for (const auto& fit : path) {
            const SpectralState state = spectral_state(inst.ensemble, fit.rho_active);
            const double ch = chi_hat(state, gamma, fit.rss, sigma2);
            const double c = looe(fit, state, gamma);
            const double w = ch / (state.q_hat * state.q_hat);
            const double predicted = kind == EnsembleKind::gaussian_iid
                                         ? c / gamma
                                         : (1.0 - gamma) / gamma * c + sigma2;
            CHECK(std::abs(w - predicted) < 1e-10);
            width.push_back(w);
            c_over.push_back(c);
        }
        const auto amin_w = std::min_element(width.begin(), width.end()) - width.begin();
        const auto amin_c = std::min_element(c_over.begin(), c_over.end()) - c_over.begin();
        CHECK(amin_w == amin_c);
    }
}

TEST_CASE("default_lambda_grid: endpoints and shape") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 60, 0.2, 0.02, 19);
    const auto grid = default_lambda_grid(inst.A, inst.y, 20, 1e-3);
    CHECK(grid.size() == 20);
    CHECK(grid.front() == doctest::Approx(lambda_max(inst.A, inst.y)).epsilon(1e-14));
    CHECK(grid.back() ==
          doctest::Approx(1e-3 * lambda_max(inst.A, inst.y)).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] < grid[i - 1]);
    CHECK_THROWS_AS(default_lambda_grid(inst.A, inst.y, 1, 0.1), std::invalid_argument);
}

TEST_CASE("run_selection: end-to-end report") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 160, 0.1, 0.02, 83);
    const auto grid = default_lambda_grid(inst.A, inst.y, 10, 1e-2);
    const SelectionReport report =
        run_selection(inst.A, inst.y, inst.ensemble, grid, 5, 7,
                      Sigma2Mode::known, inst.sigma2);
    CHECK(report.lambda_grid.size() == grid.size());
    CHECK(report.cv_errors.size() == grid.size());
    CHECK(report.looe.size() == grid.size());
    CHECK(report.ci_width.size() == grid.size());
    CHECK(std::count(grid.begin(), grid.end(), report.lambda_cv) == 1);
    CHECK(std::count(grid.begin(), grid.end(), report.lambda_ci) == 1);
    CHECK(report.sigma2_hat > 0.0);
    // argmin definitions hold
    const auto amin_cv =
        std::min_element(report.cv_errors.begin(), report.cv_errors.end()) -
        report.cv_errors.begin();
    CHECK(report.lambda_cv == grid[static_cast<std::size_t>(amin_cv)]);
}
