#pragma once

#include <functional>

namespace lassotap {

// Adaptive Gauss-Kronrod (G7, K15) integration on [a, b], driven by an
// absolute tolerance.  Callers are expected to substitute away endpoint
// singularities before handing the integrand over.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-13, int max_depth = 52);

}  // namespace lassotap
