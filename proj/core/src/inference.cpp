#include "lassotap/inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lassotap/stats.hpp"

namespace lassotap {

Eigen::VectorXd local_fields(const LassoFit& fit, const Eigen::MatrixXd& A,
                             const Eigen::VectorXd& y, double q_hat) {
    if (!(q_hat > 0.0))
        throw std::invalid_argument("local_fields: q_hat must be > 0");
    if (A.rows() != y.size() || A.cols() != fit.x_hat.size())
        throw std::invalid_argument("local_fields: dimensions mismatch");
    return q_hat * fit.x_hat + A.transpose() * (y - A * fit.x_hat);
}

double soft_threshold(double h, double lambda, double q_hat) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("soft_threshold: lambda must be > 0");
    if (!(q_hat > 0.0))
        throw std::invalid_argument("soft_threshold: q_hat must be > 0");
    if (std::abs(h) <= lambda) return 0.0;
    return (h - lambda * (h > 0.0 ? 1.0 : -1.0)) / q_hat;
}

Eigen::VectorXd debias(const Eigen::VectorXd& h, double q_hat) {
    if (!(q_hat > 0.0)) throw std::invalid_argument("debias: q_hat must be > 0");
    return h / q_hat;
}

Eigen::VectorXd p_values(const Eigen::VectorXd& h, double chi_hat) {
    if (!(chi_hat > 0.0))
        throw std::invalid_argument("p_values: chi_hat must be > 0");
    // P_i = 2(1 - Phi(|h_i|/sqrt(chi_hat))) = erfc(|h_i| / sqrt(2 chi_hat)).
    const double denom = std::sqrt(2.0 * chi_hat);
    Eigen::VectorXd p(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i)
        p[i] = std::erfc(std::abs(h[i]) / denom);
    return p;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> confidence_intervals(
    const Eigen::VectorXd& h, double q_hat, double chi_hat, double alpha_sig) {
    if (!(alpha_sig > 0.0 && alpha_sig < 1.0))
        throw std::invalid_argument("confidence_intervals: alpha_sig in (0, 1)");
    if (!(q_hat > 0.0) || !(chi_hat > 0.0))
        throw std::invalid_argument("confidence_intervals: q_hat, chi_hat must be > 0");
    const double half =
        normal_quantile(1.0 - 0.5 * alpha_sig) * std::sqrt(chi_hat) / q_hat;
    Eigen::VectorXd center = h / q_hat;
    return {center.array() - half, center.array() + half};
}

InferenceResult infer(const LassoFit& fit, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& y, const SpectralState& state,
                      double alpha_sig) {
    if (!state.chi_hat.has_value())
        throw std::invalid_argument("infer: state.chi_hat is unset");
    InferenceResult res;
    res.q_hat = state.q_hat;
    res.chi_hat = *state.chi_hat;
    res.alpha_sig = alpha_sig;
    res.h = local_fields(fit, A, y, state.q_hat);
    res.x_debiased = debias(res.h, state.q_hat);
    res.p_values = p_values(res.h, res.chi_hat);
    std::tie(res.ci_lo, res.ci_hi) =
        confidence_intervals(res.h, res.q_hat, res.chi_hat, alpha_sig);
    return res;
}

TestOutcome hypothesis_test(const Eigen::VectorXd& p, double alpha_tilde,
                            const Eigen::VectorXd& x0) {
    if (!(alpha_tilde >= 0.0 && alpha_tilde <= 1.0))
        throw std::invalid_argument("hypothesis_test: alpha_tilde in [0, 1]");
    if (p.size() != x0.size())
        throw std::invalid_argument("hypothesis_test: p and x0 length mismatch");
    TestOutcome out;
    out.alpha_tilde = alpha_tilde;
    out.reject.resize(static_cast<std::size_t>(p.size()));
    Eigen::Index nulls = 0, signals = 0, false_pos = 0, true_pos = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const bool rej = p[i] <= alpha_tilde;
        out.reject[static_cast<std::size_t>(i)] = rej;
        if (x0[i] == 0.0) {
            ++nulls;
            if (rej) ++false_pos;
        } else {
            ++signals;
            if (rej) ++true_pos;
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.fpr_defined = nulls > 0;
    out.tpr_defined = signals > 0;
    out.fpr = out.fpr_defined
                  ? static_cast<double>(false_pos) / static_cast<double>(nulls)
                  : nan;
    out.tpr = out.tpr_defined
                  ? static_cast<double>(true_pos) / static_cast<double>(signals)
                  : nan;
    return out;
}

std::vector<RocPoint> roc_curve(const Eigen::VectorXd& p,
                                const Eigen::VectorXd& x0,
                                const std::vector<double>& alphas) {
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0))
            throw std::invalid_argument("roc_curve: alphas must lie in (0, 1)");
        if (i > 0 && !(alphas[i] > alphas[i - 1]))
            throw std::invalid_argument("roc_curve: alphas must be ascending");
    }
    std::vector<RocPoint> curve;
    curve.reserve(alphas.size());
    for (double a : alphas) {
        const TestOutcome t = hypothesis_test(p, a, x0);
        curve.push_back({a, t.fpr, t.tpr});
    }
    return curve;
}

std::vector<RocPoint> lasso_roc(const std::vector<LassoFit>& path,
                                const Eigen::VectorXd& x0) {
    if (path.empty()) throw std::invalid_argument("lasso_roc: empty path");
    std::vector<RocPoint> curve;
    curve.reserve(path.size());
    for (const auto& fit : path) {
        const Eigen::VectorXd& x = fit.x_hat;
        const double thresh = 1e-10 * std::max(1.0, x.cwiseAbs().maxCoeff());
        Eigen::Index nulls = 0, signals = 0, false_pos = 0, true_pos = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const bool pos = std::abs(x[i]) > thresh;
            if (x0[i] == 0.0) {
                ++nulls;
                if (pos) ++false_pos;
            } else {
                ++signals;
                if (pos) ++true_pos;
            }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        curve.push_back(
            {fit.lambda,
             nulls > 0 ? static_cast<double>(false_pos) / static_cast<double>(nulls) : nan,
             signals > 0 ? static_cast<double>(true_pos) / static_cast<double>(signals)
                         : nan});
    }
    return curve;
}

}  // namespace lassotap
