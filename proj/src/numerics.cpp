#include "smx/numerics.hpp"

#include <cmath>
#include <string>

namespace smx {

void check_symmetric(const SymMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) fail(ErrorCode::invalid_shape, "matrix not square");
  double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > rel_tol * scale * 10.0 + 1e-12)
    fail(ErrorCode::invalid_shape, "matrix not symmetric");
}

SymMatrix matrix_sqrt_psd(const SymMatrix& m, double clamp_tol) {
  check_symmetric(m);
  if (clamp_tol < 0.0) clamp_tol = 1e-8 * std::abs(m.trace());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success)
    fail(ErrorCode::not_psd, "eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -clamp_tol)
      fail(ErrorCode::not_psd,
           "eigenvalue " + std::to_string(ev[i]) + " below -clamp_tol");
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
  Eigen::VectorXd root = ev.array().sqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

GaussianStats estimate_gaussian(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  if (n < 2) fail(ErrorCode::insufficient_samples, "estimate_gaussian needs n >= 2");
  GaussianStats g;
  g.n = static_cast<int>(n);
  g.mu = rows.colwise().mean();
  Eigen::MatrixXd centered = rows.rowwise() - g.mu.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(n - 1);
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  return g;
}

GaussianStats estimate_gaussian(const ImageTensor& features) {
  const int d = features.c * features.h * features.w;
  Eigen::MatrixXd rows(features.n, d);
  for (int i = 0; i < features.n; ++i)
    for (int j = 0; j < d; ++j)
      rows(i, j) = features.data[static_cast<size_t>(i) * d + j];
  return estimate_gaussian(rows);
}

}  // namespace smx
