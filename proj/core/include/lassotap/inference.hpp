#pragma once

#include <Eigen/Dense>

#include <vector>

#include "lassotap/lasso.hpp"
#include "lassotap/spectral.hpp"

namespace lassotap {

// Per-coordinate inference bundle.  x_debiased = h / q_hat; intervals are
// symmetric about x_debiased with constant width across coordinates.
struct InferenceResult {
    Eigen::VectorXd h;
    Eigen::VectorXd x_debiased;
    double chi_hat = 0.0;
    double q_hat = 0.0;
    Eigen::VectorXd ci_lo;
    Eigen::VectorXd ci_hi;
    Eigen::VectorXd p_values;
    double alpha_sig = 0.05;
};

// Decisions of the per-coordinate two-sided test of H0_i: x0_i = 0 at level
// alpha_tilde, with rates counted against the stored ground truth.  A rate
// whose denominator is empty is NaN with its defined-flag cleared.
struct TestOutcome {
    std::vector<bool> reject;
    double alpha_tilde = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
    bool fpr_defined = true;
    bool tpr_defined = true;
};

struct RocPoint {
    double param;  // significance level, or lambda for LASSO-path curves
    double fpr;
    double tpr;
};

// h = q_hat * x_hat + A^T (y - A x_hat).
Eigen::VectorXd local_fields(const LassoFit& fit, const Eigen::MatrixXd& A,
                             const Eigen::VectorXd& y, double q_hat);

// (h - lambda sgn(h)) / q_hat if |h| > lambda, else 0.
double soft_threshold(double h, double lambda, double q_hat);

Eigen::VectorXd debias(const Eigen::VectorXd& h, double q_hat);

// Two-sided p-values P_i = 2 (1 - Phi(|h_i| / sqrt(chi_hat))).
Eigen::VectorXd p_values(const Eigen::VectorXd& h, double chi_hat);

// h/q_hat -+ Phi^{-1}(1 - alpha_sig/2) sqrt(chi_hat)/q_hat.
std::pair<Eigen::VectorXd, Eigen::VectorXd> confidence_intervals(
    const Eigen::VectorXd& h, double q_hat, double chi_hat, double alpha_sig);

// Convenience: full inference bundle from a fit and a state whose chi_hat is
// already set.
InferenceResult infer(const LassoFit& fit, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& y, const SpectralState& state,
                      double alpha_sig);

TestOutcome hypothesis_test(const Eigen::VectorXd& p_values,
                            double alpha_tilde, const Eigen::VectorXd& x0);

// One (FPR, TPR) point per significance level; alphas must be ascending in (0, 1).
std::vector<RocPoint> roc_curve(const Eigen::VectorXd& p_values,
                                const Eigen::VectorXd& x0,
                                const std::vector<double>& alphas);

// LASSO-path ROC: coordinate i is declared positive iff x_hat_i is active.
std::vector<RocPoint> lasso_roc(const std::vector<LassoFit>& path,
                                const Eigen::VectorXd& x0);

}  // namespace lassotap
