#include "lassotap/spectral.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "lassotap/quadrature.hpp"

namespace lassotap {

namespace {

constexpr double kSolveResidual = 1e-12;
// Floor below which adaptive quadrature only burns depth on rounding noise.
constexpr double kQuadTol = 3e-15;

void check_below_support(const SpectralDensity& d, double z, const char* who) {
    if (!(z < d.lower_edge())) {
        std::ostringstream msg;
        msg << who << ": z = " << z << " is not below the support edge "
            << d.lower_edge();
        throw std::domain_error(msg.str());
    }
}

// Integrates weight(s) against the MP bulk density with the square-root edge
// singularities substituted away (s = lambda_- + t^2 left, s = lambda_+ - t^2
// right).
double mp_bulk_quadrature(const SpectralDensity& d,
                          const std::function<double(double)>& weight) {
    const double lm = d.lambda_minus;
    const double lp = d.lambda_plus;
    const double mid = 0.5 * (lm + lp);
    const double two_pi = 2.0 * std::numbers::pi;
    auto left = [&](double t) {
        const double s = lm + t * t;
        return 2.0 * t * t * std::sqrt(lp - s) / (two_pi * s) * weight(s);
    };
    auto right = [&](double t) {
        const double s = lp - t * t;
        return 2.0 * t * t * std::sqrt(s - lm) / (two_pi * s) * weight(s);
    };
    return integrate(left, 0.0, std::sqrt(mid - lm), kQuadTol, 20) +
           integrate(right, 0.0, std::sqrt(lp - mid), kQuadTol, 20);
}

// Moments of the (mass-gamma) MP bulk: m_0 = gamma, m_k = gamma sum_r
// Narayana(k, r) gamma^(r-1).  Supports the asymptotic expansions
//   S_bulk(z)  = sum_k m_k / z^(k+1),
//   I2_bulk(z) = sum_k (k+1) m_k / z^(k+2),
// used for |z| >= 2 lambda_+ where the series converges geometrically; long
// double accumulation keeps the downstream 1/chi^2 cancellations benign.
std::vector<long double> mp_bulk_moments(double gamma, int count) {
    std::vector<long double> m(static_cast<std::size_t>(count));
    const auto g = static_cast<long double>(gamma);
    m[0] = g;
    for (int k = 1; k < count; ++k) {
        // Narayana(k, r) = C(k, r) C(k, r-1) / k, r = 1..k
        long double ek = 0.0L;
        long double narayana = 1.0L;  // r = 1 value: C(k,1) C(k,0) / k = 1
        long double gpow = 1.0L;
        for (int r = 1; r <= k; ++r) {
            ek += narayana * gpow;
            gpow *= g;
            // ratio N(k, r+1) / N(k, r)
            const long double kr = static_cast<long double>(k - r);
            narayana *= (kr * (kr + 1.0L)) /
                        (static_cast<long double>(r) * (static_cast<long double>(r) + 1.0L));
        }
        m[static_cast<std::size_t>(k)] = g * ek;
    }
    return m;
}

struct SeriesPair {
    long double s;   // S contribution
    long double i2;  // second-moment contribution
};

SeriesPair mp_bulk_series(const SpectralDensity& d, long double z) {
    const int kMax = 200;
    const auto moments = mp_bulk_moments(d.bulk_mass, kMax);
    SeriesPair out{0.0L, 0.0L};
    long double zpow = 1.0L / z;  // 1/z^(k+1) at k = 0
    for (int k = 0; k < kMax; ++k) {
        const long double mk = moments[static_cast<std::size_t>(k)];
        const long double term = mk * zpow;
        out.s += term;
        out.i2 += static_cast<long double>(k + 1) * term / z;
        zpow /= z;
        if (std::abs(static_cast<double>(term)) <
            1e-20 * std::abs(static_cast<double>(out.s)))
            break;
    }
    return out;
}

bool mp_series_applies(const SpectralDensity& d, double z) {
    return std::abs(z) >= 2.0 * d.lambda_plus;
}

long double atoms_stieltjes(const SpectralDensity& d, long double z) {
    long double s = 0.0L;
    for (const auto& a : d.atoms) s += static_cast<long double>(a.weight) / (z - a.location);
    return s;
}

long double atoms_second_moment(const SpectralDensity& d, long double z) {
    long double s = 0.0L;
    for (const auto& a : d.atoms) {
        const long double dz = z - a.location;
        s += static_cast<long double>(a.weight) / (dz * dz);
    }
    return s;
}

// log((z - a)/(z - B)) for a = B e^-eta, stable for |z| >> B.
long double log_ratio(const SpectralDensity& d, long double z) {
    const long double a =
        static_cast<long double>(d.B) * std::exp(-static_cast<long double>(d.eta));
    return std::log1p((static_cast<long double>(d.B) - a) / (z - d.B));
}

long double stieltjes_ld(const SpectralDensity& d, long double z) {
    long double s = atoms_stieltjes(d, z);
    switch (d.bulk) {
        case SpectralDensity::Bulk::none:
            break;
        case SpectralDensity::Bulk::marchenko_pastur:
            if (mp_series_applies(d, static_cast<double>(z)))
                s += mp_bulk_series(d, z).s;
            else
                s += mp_bulk_quadrature(d, [zz = static_cast<double>(z)](double t) {
                    return 1.0 / (zz - t);
                });
            break;
        case SpectralDensity::Bulk::log_uniform:
            s += static_cast<long double>(d.bulk_mass) / z *
                 (1.0L + log_ratio(d, z) / d.eta);
            break;
    }
    return s;
}

long double second_moment_ld(const SpectralDensity& d, long double z) {
    long double s = atoms_second_moment(d, z);
    switch (d.bulk) {
        case SpectralDensity::Bulk::none:
            break;
        case SpectralDensity::Bulk::marchenko_pastur:
            if (mp_series_applies(d, static_cast<double>(z)))
                s += mp_bulk_series(d, z).i2;
            else
                s += mp_bulk_quadrature(d, [zz = static_cast<double>(z)](double t) {
                    return 1.0 / ((zz - t) * (zz - t));
                });
            break;
        case SpectralDensity::Bulk::log_uniform: {
            const long double a = static_cast<long double>(d.B) *
                                  std::exp(-static_cast<long double>(d.eta));
            const long double b = d.B;
            // (gamma/eta) [ (eta + log r)/z^2 + (b - a)/(z (z-a)(z-b)) ]
            s += static_cast<long double>(d.bulk_mass) / d.eta *
                 ((static_cast<long double>(d.eta) + log_ratio(d, z)) / (z * z) +
                  (b - a) / (z * (z - a) * (z - b)));
            break;
        }
    }
    return s;
}

double weight_at_zero(const SpectralDensity& d) {
    double w = 0.0;
    for (const auto& a : d.atoms)
        if (a.location == 0.0) w += a.weight;
    return w;
}

}  // namespace

double stieltjes(const SpectralDensity& d, double z) {
    check_below_support(d, z, "stieltjes");
    return static_cast<double>(stieltjes_ld(d, z));
}

double stieltjes_second_moment(const SpectralDensity& d, double z) {
    check_below_support(d, z, "stieltjes_second_moment");
    return static_cast<double>(second_moment_ld(d, z));
}

double z_derivative(const SpectralDensity& d, double z) {
    check_below_support(d, z, "z_derivative");
    if (d.bulk == SpectralDensity::Bulk::log_uniform &&
        (d.atoms.empty() ||
         (d.atoms.size() == 1 && d.atoms[0].location == 0.0))) {
        // Explicit geometric form; equals -1/int rho/(z-l)^2 because
        // (gamma/eta) B (1 - e^-eta) = 1 under kappa = eta/(1 - e^-eta).
        const long double zl = z;
        const long double a = static_cast<long double>(d.B) *
                              std::exp(-static_cast<long double>(d.eta));
        const long double lr = -log_ratio(d, zl);  // log((z-B)/(z-a))
        return static_cast<double>(
            zl * zl /
            (-1.0L + static_cast<long double>(d.bulk_mass) / d.eta * lr -
             zl / ((zl - d.B) * (zl - a))));
    }
    return static_cast<double>(-1.0L / second_moment_ld(d, z));
}

namespace {

// Residual F(z) = z S_J(z) - target of the fixed-point condition; strictly
// decreasing in z below the support.
long double solve_residual(const SpectralDensity& d, long double z,
                           long double target) {
    return z * stieltjes_ld(d, z) - target;
}

}  // namespace

double solve_z(const SpectralDensity& d, double rho_active) {
    const double gamma_eff = 1.0 - weight_at_zero(d);
    if (!(rho_active > 0.0))
        throw std::invalid_argument("solve_z: rho_active must be > 0");
    if (!(rho_active < gamma_eff))
        throw std::domain_error(
            "solve_z: rho_active >= gamma is infeasible (more active components "
            "than measurements)");

    const long double target = 1.0L - static_cast<long double>(rho_active);
    const double ub = std::min(0.0, d.lower_edge());

    // Damped fixed point from the Gaussian closed-form guess.
    double z = -(gamma_eff - rho_active) * (1.0 - rho_active) / rho_active;
    if (!(z < ub)) z = ub - 1.0;
    long double f = solve_residual(d, z, target);
    for (int it = 0; it < 100 && std::abs(static_cast<double>(f)) > 1e-14; ++it) {
        const double s = static_cast<double>(stieltjes_ld(d, z));
        const double next = 0.5 * z + 0.5 * static_cast<double>(target) / s;
        if (!std::isfinite(next) || next >= ub) break;
        z = next;
        f = solve_residual(d, z, target);
    }

    if (!(std::abs(static_cast<double>(f)) <= kSolveResidual)) {
        // Bisection fallback on the bracket (-1e3 * edge, lower edge).
        double hi = ub - 1e-14 * std::max(1.0, std::abs(ub));
        for (int it = 0; it < 60 && solve_residual(d, hi, target) >= 0.0L; ++it)
            hi = ub + (hi - ub) * 0.5;  // hug the edge
        double lo = -1e3 * std::max(1.0, d.upper_edge());
        for (int it = 0; it < 60 && solve_residual(d, lo, target) <= 0.0L; ++it)
            lo *= 2.0;
        for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::abs(lo); ++it) {
            const double mid = 0.5 * (lo + hi);
            (solve_residual(d, mid, target) > 0.0L ? lo : hi) = mid;
        }
        z = 0.5 * (lo + hi);
        f = solve_residual(d, z, target);
    }

    // Newton polish with the analytic derivative d(zS)/dz = S + z S'.
    for (int it = 0; it < 8 && f != 0.0L; ++it) {
        const long double fp =
            stieltjes_ld(d, z) - static_cast<long double>(z) * second_moment_ld(d, z);
        if (!(std::abs(static_cast<double>(fp)) > 0.0)) break;
        const double next = static_cast<double>(z - f / fp);
        if (!std::isfinite(next) || next >= ub) break;
        const long double fn = solve_residual(d, next, target);
        if (std::abs(static_cast<double>(fn)) >= std::abs(static_cast<double>(f)))
            break;
        z = next;
        f = fn;
    }

    if (std::abs(static_cast<double>(f)) > kSolveResidual) {
        std::ostringstream msg;
        msg << "solve_z: no convergence, residual " << static_cast<double>(f)
            << " at z = " << z << ", rho_active = " << rho_active;
        throw std::runtime_error(msg.str());
    }
    return z;
}

namespace {

struct StateFields {
    double chi, z, z_prime, g1, g2, q_hat;
};

StateFields generic_state(const SpectralDensity& d, double rho_active) {
    StateFields s{};
    s.z = solve_z(d, rho_active);
    const long double chi = -stieltjes_ld(d, s.z);
    const long double i2 = second_moment_ld(d, s.z);
    s.chi = static_cast<double>(chi);
    s.z_prime = z_derivative(d, s.z);
    s.g1 = static_cast<double>(0.5L * (s.z + 1.0L / chi));
    s.g2 = static_cast<double>(0.5L * (-1.0L / i2 + 1.0L / (chi * chi)));
    s.q_hat = 2.0 * s.g1;
    return s;
}

StateFields gaussian_closed_form(double gamma, double rho) {
    StateFields c{};
    const long double g = gamma, r = rho;
    const long double chi = r / (g - r);
    c.chi = static_cast<double>(chi);
    c.q_hat = static_cast<double>(g - r);
    c.g1 = static_cast<double>(0.5L * g / (1.0L + chi));
    c.g2 = static_cast<double>(0.5L * g / ((1.0L + chi) * (1.0L + chi)));
    c.z = static_cast<double>((g - r) - 1.0L / chi);
    c.z_prime = static_cast<double>(g / ((1.0L + chi) * (1.0L + chi)) -
                                    1.0L / (chi * chi));
    return c;
}

StateFields orthogonal_closed_form(double gamma, double rho) {
    StateFields c{};
    const long double g = gamma, r = rho;
    const long double chi = r * (1.0L - r) / (g - r);
    c.chi = static_cast<double>(chi);
    c.q_hat = static_cast<double>((g - r) / (1.0L - r));
    const long double disc =
        std::sqrt((chi + 1.0L) * (chi + 1.0L) - 4.0L * g * chi);
    const long double z = -(1.0L - chi + disc) / (2.0L * chi);
    const long double zp =
        -(1.0L - 2.0L * g * chi + chi + disc) / (2.0L * chi * chi * disc);
    c.z = static_cast<double>(z);
    c.z_prime = static_cast<double>(zp);
    c.g1 = static_cast<double>(0.5L * (z + 1.0L / chi));
    c.g2 = static_cast<double>(0.5L * (zp + 1.0L / (chi * chi)));
    return c;
}

void check_agreement(const StateFields& generic, const StateFields& closed,
                     double rho_active, const char* label) {
    // 1e-10 on the contract grid; fields that extract O(1) numbers from
    // ~1/chi^2 intermediates get a conditioning allowance that only matters
    // for very sparse active sets (chi -> 0).
    const double chi2 = closed.chi * closed.chi;
    const double cond =
        1e-13 * (1.0 + 1.0 / std::max(chi2, 1e-300));
    auto close = [&](double a, double b, double extra) {
        return std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)) + extra;
    };
    if (close(generic.chi, closed.chi, 0.0) && close(generic.z, closed.z, cond) &&
        close(generic.z_prime, closed.z_prime, cond) &&
        close(generic.g1, closed.g1, 0.0) && close(generic.g2, closed.g2, cond) &&
        close(generic.q_hat, closed.q_hat, 0.0))
        return;
    std::ostringstream msg;
    msg << "spectral_state: generic path disagrees with the " << label
        << " closed forms beyond tolerance at rho_active = " << rho_active
        << " (chi " << generic.chi << " vs " << closed.chi << ", g2 "
        << generic.g2 << " vs " << closed.g2 << ")";
    throw std::runtime_error(msg.str());
}

}  // namespace

SpectralState spectral_state(const EnsembleSpec& spec, double rho_active) {
    spec.validate();
    const SpectralDensity d = spectral_density(spec);
    SpectralState s;
    if (rho_active == 0.0) {
        // Empty-support limit: chi -> 0, z -> -inf, q_hat -> mean eigenvalue.
        const double m1 = d.mean();
        const double m2 = d.second_moment();
        s.chi = 0.0;
        s.z = -std::numeric_limits<double>::infinity();
        s.z_prime = -std::numeric_limits<double>::infinity();
        s.g1 = 0.5 * m1;
        s.g2 = 0.5 * (m2 - m1 * m1);
        s.q_hat = m1;
        return s;
    }

    const StateFields generic = generic_state(d, rho_active);
    StateFields fields = generic;
    // The closed-form ensembles return their exact expressions, with the
    // generic fixed-point path cross-checked against them.
    if (spec.kind == EnsembleKind::gaussian_iid) {
        const StateFields closed = gaussian_closed_form(spec.gamma, rho_active);
        check_agreement(generic, closed, rho_active, "gaussian-iid");
        fields = closed;
    } else if (spec.kind == EnsembleKind::row_orthogonal ||
               spec.kind == EnsembleKind::random_dct) {
        const StateFields closed = orthogonal_closed_form(spec.gamma, rho_active);
        check_agreement(generic, closed, rho_active, "row-orthogonal");
        fields = closed;
    }
    s.chi = fields.chi;
    s.z = fields.z;
    s.z_prime = fields.z_prime;
    s.g1 = fields.g1;
    s.g2 = fields.g2;
    s.q_hat = fields.q_hat;
    return s;
}

double chi_hat(const SpectralState& state, double gamma, double rss,
               double sigma2) {
    if (!(rss >= 0.0)) throw std::invalid_argument("chi_hat: rss must be >= 0");
    if (!(sigma2 >= 0.0))
        throw std::invalid_argument("chi_hat: sigma2 must be >= 0");
    const double denom = state.g1 - state.g2 * state.chi;
    if (!(denom > 0.0))
        throw std::runtime_error(
            "chi_hat: G' - G'' chi <= 0 flags an inconsistent spectral state");
    return (gamma * state.g2 * rss +
            (2.0 * state.g1 * state.g1 - gamma * state.g2) * sigma2) /
           denom;
}

}  // namespace lassotap
