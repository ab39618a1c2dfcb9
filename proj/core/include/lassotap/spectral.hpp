#pragma once

#include <optional>

#include "lassotap/ensemble.hpp"

namespace lassotap {

// Macroscopic spectral state at a given active density.  z sits strictly
// below the spectral support; the other fields are algebraic consequences:
//   chi  = -S_J(z)
//   g1   = (z + 1/chi) / 2        (G')
//   g2   = (z' + 1/chi^2) / 2     (G'')
//   q_hat = z + 1/chi = 2 g1      (Onsager coefficient)
// chi_hat stays unset until RSS and sigma^2 are supplied.
struct SpectralState {
    double chi = 0.0;
    double z = 0.0;
    double z_prime = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    double q_hat = 0.0;
    std::optional<double> chi_hat;
};

// S_J(z) = int rho_J(lambda) / (z - lambda) d lambda for z below the support.
// Atoms contribute weight/(z - location); the log-uniform bulk has a closed
// logarithmic form; the Marchenko-Pastur bulk is integrated adaptively with
// the edge singularities substituted away.
double stieltjes(const SpectralDensity& density, double z);

// int rho_J(lambda) / (z - lambda)^2 d lambda, same conventions as stieltjes.
double stieltjes_second_moment(const SpectralDensity& density, double z);

// Unique z < lower support edge with z = (1 - rho_active) / S_J(z).
// Damped fixed-point iteration with a bisection fallback; residual
// |z S_J(z) - (1 - rho_active)| < 1e-12.
double solve_z(const SpectralDensity& density, double rho_active);

// z'(-chi) = -[ int rho_J(lambda) / (z - lambda)^2 d lambda ]^{-1}.
// The geometric law uses its explicit closed form.
double z_derivative(const SpectralDensity& density, double z);

// Full state from the ensemble law.  For the gaussian-iid and orthogonal-row
// laws the generic fixed-point path is cross-checked against the closed
// forms to 1e-10; disagreement raises std::runtime_error.  rho_active = 0 is
// the empty-support limit (chi = 0, q_hat = mean eigenvalue).
SpectralState spectral_state(const EnsembleSpec& spec, double rho_active);

// chi_hat = gamma G'' / (G' - G'' chi) * RSS
//         + (2 G'^2 - gamma G'') / (G' - G'' chi) * sigma2.
double chi_hat(const SpectralState& state, double gamma, double rss,
               double sigma2);

}  // namespace lassotap
