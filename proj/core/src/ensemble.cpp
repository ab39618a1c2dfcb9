#include "lassotap/ensemble.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "lassotap/rng.hpp"

namespace lassotap {

std::string to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::gaussian_iid: return "gaussian-iid";
        case EnsembleKind::row_orthogonal: return "row-orthogonal";
        case EnsembleKind::random_dct: return "random-dct";
        case EnsembleKind::geometric: return "geometric";
    }
    throw std::logic_error("to_string: unknown ensemble kind");
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
    if (name == "gaussian-iid") return EnsembleKind::gaussian_iid;
    if (name == "row-orthogonal") return EnsembleKind::row_orthogonal;
    if (name == "random-dct") return EnsembleKind::random_dct;
    if (name == "geometric") return EnsembleKind::geometric;
    throw std::invalid_argument("unknown ensemble kind: " + name);
}

void EnsembleSpec::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("EnsembleSpec: gamma must lie in (0, 1]");
    if (kind == EnsembleKind::geometric) {
        if (!kappa.has_value())
            throw std::invalid_argument("EnsembleSpec: geometric requires kappa");
        if (!(*kappa >= 1.0))
            throw std::invalid_argument("EnsembleSpec: kappa must be >= 1");
    } else if (kappa.has_value()) {
        throw std::invalid_argument("EnsembleSpec: kappa only valid for geometric");
    }
}

double SpectralDensity::lower_edge() const {
    double edge = std::numeric_limits<double>::infinity();
    for (const auto& a : atoms) edge = std::min(edge, a.location);
    if (bulk == Bulk::marchenko_pastur) edge = std::min(edge, lambda_minus);
    if (bulk == Bulk::log_uniform) edge = std::min(edge, B * std::exp(-eta));
    return edge;
}

double SpectralDensity::upper_edge() const {
    double edge = -std::numeric_limits<double>::infinity();
    for (const auto& a : atoms) edge = std::max(edge, a.location);
    if (bulk == Bulk::marchenko_pastur) edge = std::max(edge, lambda_plus);
    if (bulk == Bulk::log_uniform) edge = std::max(edge, B);
    return edge;
}

double SpectralDensity::total_mass() const {
    double w = bulk_mass;
    for (const auto& a : atoms) w += a.weight;
    return w;
}

double SpectralDensity::mean() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight * a.location;
    if (bulk == Bulk::marchenko_pastur) {
        const double width = lambda_plus - lambda_minus;
        m += width * width / 16.0;
    } else if (bulk == Bulk::log_uniform) {
        m += bulk_mass / eta * B * (1.0 - std::exp(-eta));
    }
    return m;
}

double SpectralDensity::second_moment() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight * a.location * a.location;
    if (bulk == Bulk::marchenko_pastur) {
        const double width = lambda_plus - lambda_minus;
        m += width * width * (lambda_plus + lambda_minus) / 32.0;
    } else if (bulk == Bulk::log_uniform) {
        m += bulk_mass / eta * 0.5 * B * B * (1.0 - std::exp(-2.0 * eta));
    }
    return m;
}

double SpectralDensity::bulk_density(double s) const {
    switch (bulk) {
        case Bulk::none: return 0.0;
        case Bulk::marchenko_pastur:
            if (s <= lambda_minus || s >= lambda_plus) return 0.0;
            return std::sqrt((lambda_plus - s) * (s - lambda_minus)) /
                   (2.0 * std::numbers::pi * s);
        case Bulk::log_uniform: {
            const double lo = B * std::exp(-eta);
            if (s <= lo || s > B) return 0.0;
            return bulk_mass / (eta * s);
        }
    }
    return 0.0;
}

SpectralDensity spectral_density(const EnsembleSpec& spec) {
    spec.validate();
    const double g = spec.gamma;
    SpectralDensity d;
    switch (spec.kind) {
        case EnsembleKind::gaussian_iid: {
            if (g < 1.0) d.atoms.push_back({0.0, 1.0 - g});
            d.bulk = SpectralDensity::Bulk::marchenko_pastur;
            d.bulk_mass = g;
            const double sg = std::sqrt(g);
            d.lambda_minus = (1.0 - sg) * (1.0 - sg);
            d.lambda_plus = (1.0 + sg) * (1.0 + sg);
            break;
        }
        case EnsembleKind::row_orthogonal:
        case EnsembleKind::random_dct: {
            if (g < 1.0) d.atoms.push_back({0.0, 1.0 - g});
            d.atoms.push_back({1.0, g});
            break;
        }
        case EnsembleKind::geometric: {
            if (!(spec.kappa.has_value() && *spec.kappa > 1.0))
                throw std::invalid_argument(
                    "spectral_density: geometric requires kappa > 1");
            if (g < 1.0) d.atoms.push_back({0.0, 1.0 - g});
            d.bulk = SpectralDensity::Bulk::log_uniform;
            d.bulk_mass = g;
            // eta solves kappa = eta / (1 - e^-eta); B = kappa / gamma.
            const GeometricParams p = solve_geometric_params(*spec.kappa, g, 2, 2);
            d.eta = p.eta;
            d.B = p.B;
            break;
        }
    }
    return d;
}

Eigen::VectorXd generate_signal(Eigen::Index n, double rho, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_signal: n must be >= 1");
    if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("generate_signal: rho must lie in [0, 1)");
    auto rng = make_rng(seed, Stream::signal);
    std::bernoulli_distribution coin(rho);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (rho > 0.0 && coin(rng)) x[i] = gauss(rng);
    return x;
}

Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) G(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::VectorXd rdiag = qr.matrixQR().diagonal();
    for (Eigen::Index j = 0; j < n; ++j)
        if (rdiag[j] < 0.0) Q.col(j) = -Q.col(j);
    return Q;
}

namespace {

// First m indices of a seeded partial Fisher-Yates over 0..n-1, ascending.
std::vector<Eigen::Index> sample_rows(Eigen::Index m, Eigen::Index n,
                                      std::mt19937_64& rng) {
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < m; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<Eigen::Index> rows(idx.begin(), idx.begin() + m);
    std::sort(rows.begin(), rows.end());
    return rows;
}

void check_shape(const EnsembleSpec& spec, Eigen::Index m, Eigen::Index n) {
    if (m < 1 || n < 1)
        throw std::invalid_argument("generate_matrix: m, n must be >= 1");
    if ((spec.kind == EnsembleKind::row_orthogonal ||
         spec.kind == EnsembleKind::random_dct || spec.kind == EnsembleKind::geometric) &&
        m > n)
        throw std::invalid_argument("generate_matrix: m > n for a row-selection ensemble");
    if (std::abs(static_cast<double>(m) - spec.gamma * static_cast<double>(n)) >
        0.5 + 1e-9)
        throw std::invalid_argument(
            "generate_matrix: m/n inconsistent with gamma beyond rounding");
}

}  // namespace

Eigen::MatrixXd generate_matrix(const EnsembleSpec& spec, Eigen::Index m,
                                Eigen::Index n, std::uint64_t seed) {
    spec.validate();
    check_shape(spec, m, n);
    switch (spec.kind) {
        case EnsembleKind::gaussian_iid: {
            auto rng = make_rng(seed, Stream::matrix);
            std::normal_distribution<double> gauss(0.0,
                                                   1.0 / std::sqrt(static_cast<double>(n)));
            Eigen::MatrixXd A(m, n);
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < m; ++i) A(i, j) = gauss(rng);
            return A;
        }
        case EnsembleKind::row_orthogonal: {
            auto rng_haar = make_rng(seed, Stream::haar_v);
            auto rng_rows = make_rng(seed, Stream::rows);
            const Eigen::MatrixXd O = haar_orthogonal(n, rng_haar);
            const auto rows = sample_rows(m, n, rng_rows);
            Eigen::MatrixXd A(m, n);
            for (Eigen::Index i = 0; i < m; ++i) A.row(i) = O.row(rows[i]);
            return A;
        }
        case EnsembleKind::random_dct: {
            // Orthonormal DCT-II rows, materialized directly for the selected
            // row indices.
            auto rng_rows = make_rng(seed, Stream::rows);
            const auto rows = sample_rows(m, n, rng_rows);
            const double nd = static_cast<double>(n);
            Eigen::MatrixXd A(m, n);
            for (Eigen::Index i = 0; i < m; ++i) {
                const double k = static_cast<double>(rows[i]);
                const double scale =
                    (rows[i] == 0) ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
                for (Eigen::Index c = 0; c < n; ++c)
                    A(i, c) = scale * std::cos(std::numbers::pi *
                                               (2.0 * static_cast<double>(c) + 1.0) *
                                               k / (2.0 * nd));
            }
            return A;
        }
        case EnsembleKind::geometric: {
            const GeometricParams p =
                solve_geometric_params(*spec.kappa, spec.gamma, m, n);
            auto rng_u = make_rng(seed, Stream::haar_u);
            auto rng_v = make_rng(seed, Stream::haar_v);
            const Eigen::MatrixXd U = haar_orthogonal(m, rng_u);
            const Eigen::MatrixXd V = haar_orthogonal(n, rng_v);
            // A = U Sigma V^T with Sigma the m x n diagonal of singular values.
            return (U * p.singular_values.asDiagonal()) *
                   V.leftCols(m).transpose();
        }
    }
    throw std::logic_error("generate_matrix: unknown ensemble kind");
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> observe(const Eigen::MatrixXd& A,
                                                    const Eigen::VectorXd& x0,
                                                    double sigma2,
                                                    std::uint64_t seed) {
    if (A.cols() != x0.size())
        throw std::invalid_argument("observe: A and x0 dimensions mismatch");
    if (!(sigma2 >= 0.0))
        throw std::invalid_argument("observe: sigma2 must be >= 0");
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(A.rows());
    if (sigma2 > 0.0) {
        auto rng = make_rng(seed, Stream::noise);
        std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));
        for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = gauss(rng);
    }
    Eigen::VectorXd y = A * x0 + xi;
    return {std::move(y), std::move(xi)};
}

GeometricParams solve_geometric_params(double kappa, double gamma,
                                       Eigen::Index m, Eigen::Index n) {
    if (!(kappa > 1.0))
        throw std::invalid_argument(
            "solve_geometric_params: kappa must be > 1 (eta -> 0 is the flat spectrum)");
    if (m < 1 || n < 1 || m > n)
        throw std::invalid_argument("solve_geometric_params: need 1 <= m <= n");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("solve_geometric_params: gamma in (0, 1]");

    // kappa = eta / (1 - e^-eta) is strictly increasing in eta; bisection.
    auto f = [](double eta) { return eta / (1.0 - std::exp(-eta)); };
    double lo = 1e-12, hi = std::max(1.0, 2.0 * (kappa - 1.0));
    while (f(hi) < kappa) hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < kappa ? lo : hi) = mid;
    }
    const double eta = 0.5 * (lo + hi);

    GeometricParams p;
    p.eta = eta;
    p.B = kappa / gamma;
    // s_i = nu_i^2 = B tau_s^(i-1) with tau_s = e^{-eta/(m-1)}, so the squared
    // singular values span exactly [B e^-eta, B]; one common rescale then
    // enforces (1/N) sum s_i = 1.
    const double tau_s = (m > 1) ? std::exp(-eta / static_cast<double>(m - 1)) : 1.0;
    p.tau = std::sqrt(tau_s);
    Eigen::VectorXd s(m);
    for (Eigen::Index i = 0; i < m; ++i)
        s[i] = p.B * std::pow(tau_s, static_cast<double>(i));
    const double scale = static_cast<double>(n) / s.sum();
    p.singular_values = (s * scale).cwiseSqrt();
    return p;
}

ProblemInstance make_instance(const EnsembleSpec& spec, Eigen::Index n,
                              double rho, double sigma2, std::uint64_t seed) {
    spec.validate();
    const auto m = static_cast<Eigen::Index>(std::llround(spec.gamma * static_cast<double>(n)));
    ProblemInstance inst;
    inst.ensemble = spec;
    inst.rho = rho;
    inst.sigma2 = sigma2;
    inst.seed = seed;
    // The three draws use disjoint purpose substreams of the same seed.
    inst.x0 = generate_signal(n, rho, seed);
    inst.A = generate_matrix(spec, m, n, seed);
    auto [y, xi] = observe(inst.A, inst.x0, sigma2, seed);
    inst.y = std::move(y);
    inst.xi = std::move(xi);
    return inst;
}

}  // namespace lassotap
