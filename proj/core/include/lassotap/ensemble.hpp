#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace lassotap {

enum class EnsembleKind { gaussian_iid, row_orthogonal, random_dct, geometric };

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

// Which random-matrix family the design is drawn from.  gamma = M/N is the
// measurement ratio; kappa (peak-to-average eigenvalue ratio) applies to the
// geometric family only.
struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::gaussian_iid;
    double gamma = 0.5;
    std::optional<double> kappa;

    void validate() const;  // throws std::invalid_argument on bad parameters
};

// Geometric singular-value layout.  The squared singular values s_i = nu_i^2
// decay geometrically so that they span exactly [B e^-eta, B]; kappa =
// eta/(1 - e^-eta), B = kappa/gamma, and all nu_i carry one common rescale
// factor enforcing the power constraint (1/N) sum nu_i^2 = 1.
struct GeometricParams {
    double eta = 0.0;
    double B = 0.0;
    double tau = 1.0;  // nu_i = nu_1 * tau^(i-1)
    Eigen::VectorXd singular_values;
};

// One synthetic regression problem, ground truth retained for evaluation.
// Invariant: y = A x0 + xi exactly as constructed.
struct ProblemInstance {
    EnsembleSpec ensemble;
    Eigen::MatrixXd A;
    Eigen::VectorXd y;
    Eigen::VectorXd x0;
    Eigen::VectorXd xi;
    double sigma2 = 0.0;
    double rho = 0.0;
    std::uint64_t seed = 0;
};

// Analytic limiting eigenvalue law of A^T A: point masses plus at most one
// continuous component.  Total mass is 1 for every valid ensemble.
struct SpectralDensity {
    struct Atom {
        double location;
        double weight;
    };
    enum class Bulk { none, marchenko_pastur, log_uniform };

    std::vector<Atom> atoms;
    Bulk bulk = Bulk::none;
    double bulk_mass = 0.0;

    // marchenko_pastur: support [lambda_minus, lambda_plus], density
    // sqrt((lambda_plus - s)(s - lambda_minus)) / (2 pi s).
    double lambda_minus = 0.0;
    double lambda_plus = 0.0;

    // log_uniform: support (B e^-eta, B], density gamma / (eta s).
    double B = 0.0;
    double eta = 0.0;

    double lower_edge() const;  // infimum of the support
    double upper_edge() const;
    double total_mass() const;
    double mean() const;           // first moment, closed form
    double second_moment() const;  // second moment, closed form
    double bulk_density(double s) const;
};

SpectralDensity spectral_density(const EnsembleSpec& spec);

// Bernoulli-Gauss signal: each coordinate is 0 with probability 1 - rho,
// otherwise standard normal.
Eigen::VectorXd generate_signal(Eigen::Index n, double rho, std::uint64_t seed);

Eigen::MatrixXd generate_matrix(const EnsembleSpec& spec, Eigen::Index m,
                                Eigen::Index n, std::uint64_t seed);

// y = A x0 + xi with xi ~ N(0, sigma2 I).  Returns (y, xi).
std::pair<Eigen::VectorXd, Eigen::VectorXd> observe(const Eigen::MatrixXd& A,
                                                    const Eigen::VectorXd& x0,
                                                    double sigma2,
                                                    std::uint64_t seed);

GeometricParams solve_geometric_params(double kappa, double gamma,
                                       Eigen::Index m, Eigen::Index n);

// Convenience: draw (x0, A, xi) from documented substreams of `seed` and
// assemble the instance.  M = round(gamma * n).
ProblemInstance make_instance(const EnsembleSpec& spec, Eigen::Index n,
                              double rho, double sigma2, std::uint64_t seed);

// Haar-distributed orthogonal matrix: QR of an i.i.d. Gaussian matrix with
// the sign convention R_ii > 0 (uncorrected QR is not Haar).
Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::mt19937_64& rng);

}  // namespace lassotap
