#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "lassotap/ensemble.hpp"
#include "lassotap/lasso.hpp"
#include "lassotap/spectral.hpp"

namespace lassotap {

// Per-grid-point selection diagnostics.  lambda_cv minimizes the K-fold CV
// error, lambda_ci minimizes the CI-width criterion; ties break toward the
// larger lambda.
struct SelectionReport {
    std::vector<double> lambda_grid;  // descending
    std::vector<double> cv_errors;
    std::vector<double> looe;      // leave-one-out error C(lambda)
    std::vector<double> ci_width;  // chi_hat / q_hat^2 per lambda
    double lambda_cv = 0.0;
    double lambda_ci = 0.0;
    double sigma2_hat = 0.0;
};

struct CvResult {
    std::vector<double> cv_errors;  // across-fold mean squared prediction error
    double lambda_cv = 0.0;
};

// Rows are partitioned into k folds by a seeded permutation; each fold is
// scored with fits trained on its complement (warm-started down the grid).
CvResult kfold_cv(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                  const std::vector<double>& lambda_grid, int k,
                  std::uint64_t seed, const SolverOptions& options = {});

// sigma2_hat = ||y - A x_hat||^2 / (M - N rho_active).
double estimate_sigma2(const LassoFit& fit, const Eigen::MatrixXd& A,
                       const Eigen::VectorXd& y);

// C = (1 - rho_active/gamma)^{-2} RSS.  The equivalent form
// (1 - 2 chi G'/gamma)^{-2} RSS is asserted equal to 1e-10.
double looe(const LassoFit& fit, const SpectralState& state, double gamma);

// Argmin of the criterion over a descending grid, ties toward larger lambda.
double select_by_ci_width(const std::vector<double>& lambda_grid,
                          const std::vector<double>& criterion);

// lambda_max down to lambda_max * min_ratio, log-spaced, descending.
std::vector<double> default_lambda_grid(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& y,
                                        int size = 20, double min_ratio = 1e-3);

enum class Sigma2Mode { known, estimated };

// Full selection pass: K-fold CV for lambda_cv, Eq.-style residual variance
// estimate at lambda_cv, then per-lambda looe and CI-width criteria computed
// on full-data fits.  sigma2_known feeds chi_hat in `known` mode; `estimated`
// mode uses sigma2_hat.
SelectionReport run_selection(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& y,
                              const EnsembleSpec& spec,
                              const std::vector<double>& lambda_grid, int k,
                              std::uint64_t seed, Sigma2Mode mode,
                              double sigma2_known,
                              const SolverOptions& options = {});

}  // namespace lassotap
