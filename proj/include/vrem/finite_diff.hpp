#pragma once

#include <Eigen/Core>

#include "vrem/dataset.hpp"
#include "vrem/model.hpp"

namespace vrem {

inline constexpr double kDefaultFdStep = 1e-5;

// Central-difference gradient of W at s.
Eigen::VectorXd fd_gradient_objective(const Model& model, const Dataset& data,
                                      const StatVector& s, double step = kDefaultFdStep);

struct JacobianEstimate {
  Eigen::MatrixXd raw;        // J(i, j) = d phi_i(T(s)) / d s_j
  Eigen::MatrixXd symmetric;  // (J + J^T) / 2
  double asymmetry = 0.0;     // ||J - J^T||_F / ||J||_F
};

// Jacobian of phi o T at s. Throws UnsupportedOperation for models without phi.
JacobianEstimate fd_jacobian_phiT(const Model& model, const Dataset& data, const StatVector& s,
                                  double step = kDefaultFdStep);

}  // namespace vrem
