#pragma once

#include <Eigen/Dense>

namespace lassotap {

// Standard normal CDF, absolute error below 1e-15.
double normal_cdf(double x);

// Standard normal quantile.  Rational approximation polished by Halley steps;
// absolute error below 1e-12 over (0, 1).
double normal_quantile(double p);

double sample_mean(const Eigen::VectorXd& v);

// Unbiased (n-1) sample variance.
double sample_variance(const Eigen::VectorXd& v);

}  // namespace lassotap
