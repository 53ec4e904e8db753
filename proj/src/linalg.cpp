#include "bundlekit/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace bundlekit {

double op_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  // Largest singular value via the Gram matrix on the smaller side; much
  // cheaper than an SVD for the small dense blocks used here.
  const Eigen::MatrixXcd gram =
      m.rows() <= m.cols() ? Eigen::MatrixXcd(m * m.adjoint()) : Eigen::MatrixXcd(m.adjoint() * m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double lam = eig.eigenvalues().maxCoeff();
  return lam > 0.0 ? std::sqrt(lam) : 0.0;
}

Eigen::MatrixXcd range_basis(const Eigen::MatrixXcd& m, int rank) {
  if (rank < 1 || rank > m.cols() || rank > m.rows())
    throw std::invalid_argument("range_basis: rank out of range");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(m);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), rank);
  return q;
}

}  // namespace bundlekit
