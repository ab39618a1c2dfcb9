#include "lassotap/lasso.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace lassotap {

double lambda_max(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
    if (A.rows() != y.size())
        throw std::invalid_argument("lambda_max: A and y dimensions mismatch");
    return (A.transpose() * y).cwiseAbs().maxCoeff();
}

double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                       double lambda, const Eigen::VectorXd& x) {
    return 0.5 * (y - A * x).squaredNorm() + lambda * x.lpNorm<1>();
}

double active_density(const Eigen::VectorXd& x) {
    const double thresh = 1e-10 * std::max(1.0, x.cwiseAbs().maxCoeff());
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) > thresh) ++count;
    return static_cast<double>(count) / static_cast<double>(x.size());
}

namespace {

inline double soft(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Max KKT violation of 0.5||y-Ax||^2 + lambda||x||_1 given g = A^T r:
// active coordinates need g_j = lambda sgn(x_j), inactive |g_j| <= lambda.
double kkt_violation(const Eigen::VectorXd& g, const Eigen::VectorXd& x,
                     double lambda) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        double v;
        if (x[j] > 0.0)
            v = std::abs(g[j] - lambda);
        else if (x[j] < 0.0)
            v = std::abs(g[j] + lambda);
        else
            v = std::max(0.0, std::abs(g[j]) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

LassoFit fit_impl(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                  double lambda, Eigen::VectorXd x,
                  const SolverOptions& options) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("fit_lasso: lambda must be > 0");
    if (A.rows() != y.size())
        throw std::invalid_argument("fit_lasso: A and y dimensions mismatch");
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    if (x.size() == 0)
        x = Eigen::VectorXd::Zero(n);
    else if (x.size() != n)
        throw std::invalid_argument("fit_lasso: warm start has wrong length");

    const Eigen::VectorXd col_sq = A.colwise().squaredNorm();
    const double scale = std::max(1.0, lambda_max(A, y));
    const double tol = options.tolerance * scale;

    Eigen::VectorXd r = y - A * x;
    std::vector<Eigen::Index> active;
    active.reserve(static_cast<std::size_t>(n));

    // One pass of cyclic updates over the given coordinates; returns the
    // largest gradient-scale change c_j |dx_j|.
    auto sweep = [&](const std::vector<Eigen::Index>& coords) {
        double max_change = 0.0;
        for (Eigen::Index j : coords) {
            if (col_sq[j] <= 0.0) {
                x[j] = 0.0;
                continue;
            }
            const double old = x[j];
            const double rho_j = A.col(j).dot(r) + col_sq[j] * old;
            const double next = soft(rho_j, lambda) / col_sq[j];
            if (next != old) {
                r.noalias() -= A.col(j) * (next - old);
                x[j] = next;
                max_change = std::max(max_change, col_sq[j] * std::abs(next - old));
            }
        }
        return max_change;
    };

    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) all[static_cast<std::size_t>(j)] = j;

    double sweeps = 0.0;
    double kkt = std::numeric_limits<double>::infinity();
    while (true) {
        sweep(all);
        sweeps += 1.0;

        // Polish the active set until its coordinate-wise optimality is well
        // below the global tolerance.
        active.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (x[j] != 0.0) active.push_back(j);
        if (!active.empty()) {
            const double frac =
                static_cast<double>(active.size()) / static_cast<double>(n);
            for (int inner = 0; inner < 2000; ++inner) {
                const double change = sweep(active);
                sweeps += frac;
                if (change <= 0.1 * tol) break;
            }
        }

        // Refresh the residual to shed accumulated drift, then test KKT.
        r.noalias() = y - A * x;
        const Eigen::VectorXd g = A.transpose() * r;
        kkt = kkt_violation(g, x, lambda);
        sweeps += 1.0;
        if (kkt <= tol) break;
        if (sweeps > static_cast<double>(options.max_iter)) {
            std::ostringstream msg;
            msg << "fit_lasso: no convergence within " << options.max_iter
                << " sweeps, KKT residual " << kkt / scale;
            throw LassoConvergenceError(msg.str(), kkt / scale);
        }
    }

    LassoFit fit;
    fit.x_hat = std::move(x);
    fit.lambda = lambda;
    fit.rho_active = active_density(fit.x_hat);
    fit.rss = r.squaredNorm() / static_cast<double>(m);
    fit.kkt_residual = kkt / scale;
    fit.sweeps = static_cast<int>(sweeps);
    return fit;
}

}  // namespace

LassoFit fit_lasso(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                   double lambda, const SolverOptions& options) {
    return fit_impl(A, y, lambda, Eigen::VectorXd(), options);
}

LassoFit fit_lasso_warm(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                        double lambda, const Eigen::VectorXd& warm,
                        const SolverOptions& options) {
    return fit_impl(A, y, lambda, warm, options);
}

std::vector<LassoFit> fit_path(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& y,
                               const std::vector<double>& lambdas,
                               const SolverOptions& options) {
    if (lambdas.empty())
        throw std::invalid_argument("fit_path: empty lambda sequence");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0))
            throw std::invalid_argument("fit_path: lambdas must be > 0");
        if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
            throw std::invalid_argument("fit_path: lambdas must be strictly decreasing");
    }
    std::vector<LassoFit> path;
    path.reserve(lambdas.size());
    Eigen::VectorXd warm;
    for (double lambda : lambdas) {
        path.push_back(fit_impl(A, y, lambda, warm, options));
        warm = path.back().x_hat;
    }
    return path;
}

}  // namespace lassotap
