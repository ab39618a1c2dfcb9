#pragma once

#include <Eigen/Dense>

#include <string>

#include "lassotap/ensemble.hpp"

namespace lassotap {

// Shortest exact decimal form (17 significant digits); parsing it back
// reproduces the double bit-for-bit.
std::string format_double(double v);

void write_vector_csv(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector_csv(const std::string& path);

// Row-major layout: one CSV line per matrix row.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Instance directory layout: A.csv, y.csv, x0.csv, xi.csv plus a JSON
// sidecar (instance.json) recording the ensemble, seed, sigma2, and rho.
void save_instance(const std::string& dir, const ProblemInstance& instance);
ProblemInstance load_instance(const std::string& dir);

}  // namespace lassotap
