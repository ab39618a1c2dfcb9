#include "lassotap/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace lassotap {

namespace {

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss-7 nodes.
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.000000000000000};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

std::pair<double, double> gk15(const std::function<double(double)>& f, double a,
                               double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resg = kWg[3] * fc;
    double resk = kWgk[7] * fc;
    for (int j = 0; j < 3; ++j) {
        const double x = h * kXgk[2 * j + 1];
        const double fs = f(c - x) + f(c + x);
        resg += kWg[j] * fs;
        resk += kWgk[2 * j + 1] * fs;
    }
    for (int j = 0; j < 4; ++j) {
        const double x = h * kXgk[2 * j];
        resk += kWgk[2 * j] * (f(c - x) + f(c + x));
    }
    return {resk * h, std::abs(resk - resg) * h};
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double tol, int depth) {
    auto [val, err] = gk15(f, a, b);
    if (err <= tol || depth <= 0) return val;
    const double m = 0.5 * (a + b);
    return adapt(f, a, m, 0.5 * tol, depth - 1) +
           adapt(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
    if (!(b >= a)) throw std::invalid_argument("integrate: requires b >= a");
    if (a == b) return 0.0;
    return adapt(f, a, b, abs_tol, max_depth);
}

}  // namespace lassotap
