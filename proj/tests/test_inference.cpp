#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lassotap/inference.hpp"
#include "lassotap/stats.hpp"
#include "oracles.hpp"

using namespace lassotap;

namespace {

EnsembleSpec make_spec(EnsembleKind kind, double gamma) {
    EnsembleSpec spec;
    spec.kind = kind;
    spec.gamma = gamma;
    return spec;
}

Eigen::VectorXd vec(std::initializer_list<double> vals) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    Eigen::Index i = 0;
    for (double x : vals) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("local_fields: zero fit reduces to A^T y") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 60, 0.2, 0.02, 3);
    LassoFit fit;
    fit.x_hat = Eigen::VectorXd::Zero(60);
    const Eigen::VectorXd h = local_fields(fit, inst.A, inst.y, 0.5);
    CHECK((h - inst.A.transpose() * inst.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("local_fields: 1x1 direct substitution") {
    Eigen::MatrixXd A(1, 1);
    A << 1.0;
    LassoFit fit;
    fit.x_hat = vec({1.0});
    const Eigen::VectorXd h = local_fields(fit, A, vec({2.0}), 1.0);
    CHECK(h[0] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("local_fields: errors") {
    Eigen::MatrixXd A(2, 3);
    A.setZero();
    LassoFit fit;
    fit.x_hat = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(local_fields(fit, A, Eigen::VectorXd::Zero(2), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(local_fields(fit, A, Eigen::VectorXd::Zero(5), 1.0),
                    std::invalid_argument);
}

TEST_CASE("soft_threshold: pinned examples") {
    CHECK(soft_threshold(0.5, 1.0, 2.0) == 0.0);
    CHECK(soft_threshold(3.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(soft_threshold(-3.0, 1.0, 2.0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(soft_threshold(1.0, 1.0, 2.0) == 0.0);  // boundary
}

TEST_CASE("TAP self-consistency: ST(h_i) recovers the LASSO solution (1e-6)") {
    for (std::uint64_t seed : {4, 5}) {
        const ProblemInstance inst = make_instance(
            make_spec(EnsembleKind::gaussian_iid, 0.5), 400, 0.1, 0.02, seed);
        const LassoFit fit = fit_lasso(inst.A, inst.y, 0.1);
        const SpectralState state =
            spectral_state(inst.ensemble, fit.rho_active);
        const Eigen::VectorXd h = local_fields(fit, inst.A, inst.y, state.q_hat);
        for (Eigen::Index i = 0; i < h.size(); ++i)
            CHECK(std::abs(soft_threshold(h[i], 0.1, state.q_hat) - fit.x_hat[i]) <
                  1e-6);
    }
}

TEST_CASE("debias: elementwise division") {
    CHECK(debias(Eigen::VectorXd::Zero(4), 0.3).cwiseAbs().maxCoeff() == 0.0);
    CHECK(debias(vec({0.5}), 0.25)[0] == doctest::Approx(2.0).epsilon(1e-14));
    const Eigen::VectorXd h = vec({0.1, -0.7});
    CHECK(debias(h, 1.0) == h);
    CHECK_THROWS_AS(debias(h, 0.0), std::invalid_argument);
}

TEST_CASE("p_values: pinned examples") {
    CHECK(p_values(vec({0.0}), 1.0)[0] == 1.0);
    // |h|/sqrt(chi_hat) = 1.959964 -> 0.05 within 1e-4
    CHECK(std::abs(p_values(vec({1.959964}), 1.0)[0] - 0.05) < 1e-4);
    CHECK(std::abs(p_values(vec({-1.959964}), 1.0)[0] - 0.05) < 1e-4);
    CHECK(p_values(vec({50.0}), 1.0)[0] < 1e-100);
    CHECK_THROWS_AS(p_values(vec({1.0}), 0.0), std::invalid_argument);
    const Eigen::VectorXd p = p_values(vec({0.3, -2.0, 14.0}), 0.7);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        CHECK(p[i] >= 0.0);
        CHECK(p[i] <= 1.0);
    }
}

TEST_CASE("confidence_intervals: pinned quantile example") {
    auto [lo, hi] = confidence_intervals(vec({1.0}), 0.5, 0.25, 0.05);
    CHECK(std::abs(lo[0] - (2.0 - 1.959964)) < 1e-4);
    CHECK(std::abs(hi[0] - (2.0 + 1.959964)) < 1e-4);
}

TEST_CASE("confidence_intervals: width is constant and vanishes as alpha -> 1") {
    const Eigen::VectorXd h = vec({0.0, 1.0, -3.0, 0.2});
    auto [lo, hi] = confidence_intervals(h, 0.5, 0.25, 0.05);
    const double expected = 2.0 * normal_quantile(0.975) * std::sqrt(0.25) / 0.5;
    for (Eigen::Index i = 0; i < h.size(); ++i)
        CHECK(hi[i] - lo[i] == doctest::Approx(expected).epsilon(1e-12));

    auto [lo1, hi1] = confidence_intervals(h, 0.5, 0.25, 1.0 - 1e-12);
    CHECK((hi1 - lo1).cwiseAbs().maxCoeff() < 1e-5);
    CHECK_THROWS_AS(confidence_intervals(h, 0.5, 0.25, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(confidence_intervals(h, 0.5, 0.25, 1.0), std::invalid_argument);
}

TEST_CASE("hypothesis_test: boundary logic and counting") {
    const TestOutcome t1 = hypothesis_test(vec({0.03}), 0.05, vec({1.0}));
    CHECK(t1.reject[0]);
    CHECK(t1.tpr == 1.0);
    CHECK(!t1.fpr_defined);
    CHECK(std::isnan(t1.fpr));

    // reject = (1, 0, 1) against x0 = (0, 0, 1): FPR = 0.5, TPR = 1
    const TestOutcome t2 =
        hypothesis_test(vec({0.01, 0.9, 0.02}), 0.05, vec({0.0, 0.0, 1.0}));
    CHECK(t2.reject[0]);
    CHECK(!t2.reject[1]);
    CHECK(t2.reject[2]);
    CHECK(t2.fpr == doctest::Approx(0.5));
    CHECK(t2.tpr == doctest::Approx(1.0));

    const TestOutcome t3 =
        hypothesis_test(vec({0.01, 0.9, 0.02}), 0.0, vec({0.0, 0.0, 1.0}));
    CHECK(t3.fpr == 0.0);
    CHECK(t3.tpr == 0.0);

    const TestOutcome t4 = hypothesis_test(vec({0.2, 0.4}), 0.5, vec({0.0, 0.0}));
    CHECK(!t4.tpr_defined);
    CHECK(std::isnan(t4.tpr));
    CHECK_THROWS_AS(hypothesis_test(vec({0.1}), 1.5, vec({0.0})),
                    std::invalid_argument);
}

TEST_CASE("roc_curve: endpoints and monotonicity") {
    // p-values near 0 for signals, near 1 for nulls: ideal classifier.
    const Eigen::VectorXd p = vec({1e-12, 1e-11, 0.999, 0.998, 0.997});
    const Eigen::VectorXd x0 = vec({1.0, -2.0, 0.0, 0.0, 0.0});
    const auto curve = roc_curve(p, x0, {1e-9, 0.05, 0.5, 1.0 - 1e-9});
    CHECK(curve.front().fpr == 0.0);
    CHECK(curve.front().tpr == 1.0);  // signals already separate at 1e-9
    CHECK(curve.back().fpr == 1.0);
    CHECK(curve.back().tpr == 1.0);
    bool hits_ideal = false;
    for (const auto& pt : curve)
        if (pt.fpr == 0.0 && pt.tpr == 1.0) hits_ideal = true;
    CHECK(hits_ideal);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].fpr >= curve[i - 1].fpr);
        CHECK(curve[i].tpr >= curve[i - 1].tpr);
    }
    CHECK_THROWS_AS(roc_curve(p, x0, {0.5, 0.1}), std::invalid_argument);
}

TEST_CASE("lasso_roc: trivial endpoints") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 80, 0.2, 0.02, 8);
    const double lmax = lambda_max(inst.A, inst.y);
    const auto path = fit_path(inst.A, inst.y, {lmax, 0.4 * lmax, 0.1 * lmax});
    const auto curve = lasso_roc(path, inst.x0);
    CHECK(curve[0].fpr == 0.0);
    CHECK(curve[0].tpr == 0.0);

    // Support equal to the true support scores (0, 1).
    LassoFit exact;
    exact.lambda = 1.0;
    exact.x_hat = inst.x0;
    const auto ideal = lasso_roc({exact}, inst.x0);
    CHECK(ideal[0].fpr == 0.0);
    CHECK(ideal[0].tpr == 1.0);
    CHECK_THROWS_AS(lasso_roc({}, inst.x0), std::invalid_argument);
}

TEST_CASE("lasso_roc: rates grow along the path while the active set grows") {
    const ProblemInstance inst =
        make_instance(make_spec(EnsembleKind::gaussian_iid, 0.5), 200, 0.1, 0.02, 17);
    const double lmax = lambda_max(inst.A, inst.y);
    std::vector<double> grid;
    for (int i = 0; i < 8; ++i) grid.push_back(lmax * std::pow(0.55, i));
    const auto path = fit_path(inst.A, inst.y, grid);
    const auto curve = lasso_roc(path, inst.x0);
    for (std::size_t l = 1; l < path.size(); ++l) {
        // Only asserted when the support actually grew (not guaranteed in
        // general, sampled here).
        bool grew = true;
        for (Eigen::Index i = 0; i < inst.x0.size(); ++i)
            if (path[l - 1].x_hat[i] != 0.0 && path[l].x_hat[i] == 0.0) grew = false;
        if (grew) {
            CHECK(curve[l].fpr >= curve[l - 1].fpr);
            CHECK(curve[l].tpr >= curve[l - 1].tpr);
        }
    }
}

TEST_CASE("infer: bundle invariants on a real fit") {
    const ProblemInstance inst = make_instance(
        make_spec(EnsembleKind::random_dct, 0.5), 300, 0.1, 0.02, 12);
    const LassoFit fit = fit_lasso(inst.A, inst.y, 0.1);
    SpectralState state = spectral_state(inst.ensemble, fit.rho_active);
    state.chi_hat = chi_hat(state, 0.5, fit.rss, inst.sigma2);
    const InferenceResult inf = infer(fit, inst.A, inst.y, state, 0.05);
    CHECK(inf.x_debiased == debias(inf.h, state.q_hat));
    for (Eigen::Index i = 0; i < inf.h.size(); ++i) {
        CHECK(inf.ci_lo[i] < inf.x_debiased[i]);
        CHECK(inf.x_debiased[i] < inf.ci_hi[i]);
        CHECK(inf.p_values[i] >= 0.0);
        CHECK(inf.p_values[i] <= 1.0);
    }
    SpectralState unset = spectral_state(inst.ensemble, fit.rho_active);
    CHECK_THROWS_AS(infer(fit, inst.A, inst.y, unset, 0.05), std::invalid_argument);
}

TEST_CASE("standardized fields look normal at moderate size") {
    const ProblemInstance inst = make_instance(
        make_spec(EnsembleKind::gaussian_iid, 0.5), 800, 0.1, 0.02, 23);
    const LassoFit fit = fit_lasso(inst.A, inst.y, 0.1);
    SpectralState state = spectral_state(inst.ensemble, fit.rho_active);
    const double ch = chi_hat(state, 0.5, fit.rss, inst.sigma2);
    const Eigen::VectorXd h = local_fields(fit, inst.A, inst.y, state.q_hat);
    std::vector<double> standardized(static_cast<std::size_t>(h.size()));
    for (Eigen::Index i = 0; i < h.size(); ++i)
        standardized[static_cast<std::size_t>(i)] =
            (h[i] - state.q_hat * inst.x0[i]) / std::sqrt(ch);
    CHECK(oracle::ks_distance(standardized, oracle::std_normal_cdf) < 0.06);
}
