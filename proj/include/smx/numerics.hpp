#pragma once

#include <Eigen/Dense>

#include "smx/tensor.hpp"

namespace smx {

using SymMatrix = Eigen::MatrixXd;

// Gaussian fit of a feature set: the operands of the Frechet distance.
struct GaussianStats {
  Eigen::VectorXd mu;
  SymMatrix cov;
  int n = 0;

  int dim() const { return static_cast<int>(mu.size()); }
};

// clamp_tol < 0 selects the default 1e-8 * trace(m).
// Eigenvalues in [-clamp_tol, 0) are clamped to zero; anything below is an error.
SymMatrix matrix_sqrt_psd(const SymMatrix& m, double clamp_tol = -1.0);

// Sample mean and unbiased covariance (divisor n-1) of row vectors.
GaussianStats estimate_gaussian(const Eigen::MatrixXd& rows);

// Rows = per-image feature vectors taken from an n x d flattened tensor.
GaussianStats estimate_gaussian(const ImageTensor& features);

void check_symmetric(const SymMatrix& m, double rel_tol = 1e-9);

}  // namespace smx
