#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace lassotap {

struct SolverOptions {
    // Max KKT violation on the normalized gradient scale (see fit_lasso).
    double tolerance = 1e-8;
    // Budget in full-sweep equivalents (N coordinate updates = 1).
    int max_iter = 100000;
};

// Solution of min_x 0.5 ||y - A x||^2 + lambda ||x||_1.
struct LassoFit {
    Eigen::VectorXd x_hat;
    double lambda = 0.0;
    double rho_active = 0.0;  // |{i : x_i active}| / N
    double rss = 0.0;         // ||y - A x||^2 / M
    double kkt_residual = 0.0;
    int sweeps = 0;
};

class LassoConvergenceError : public std::runtime_error {
  public:
    LassoConvergenceError(const std::string& msg, double kkt)
        : std::runtime_error(msg), kkt_residual(kkt) {}
    double kkt_residual;
};

double lambda_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& y);

double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                       double lambda, const Eigen::VectorXd& x);

// Active count uses |x_i| > 1e-10 * max(1, ||x||_inf); coordinate descent
// produces exact zeros, the threshold only guards round-off.
double active_density(const Eigen::VectorXd& x);

// Cyclic coordinate descent.  Deterministic: same inputs and options yield
// bit-identical fits.  Convergence is declared on the max KKT violation
// normalized by max(1, ||A^T y||_inf); non-convergence within max_iter
// throws LassoConvergenceError carrying the last residual.
LassoFit fit_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                   double lambda, const SolverOptions& options = {});

// Warm-started variant; `warm` must have length N (it is copied, not aliased).
LassoFit fit_lasso_warm(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                        double lambda, const Eigen::VectorXd& warm,
                        const SolverOptions& options = {});

// Fits along a strictly decreasing positive lambda sequence, warm-starting
// each fit from the previous solution.
std::vector<LassoFit> fit_path(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& y,
                               const std::vector<double>& lambdas,
                               const SolverOptions& options = {});

}  // namespace lassotap
