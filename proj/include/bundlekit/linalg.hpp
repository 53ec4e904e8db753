#pragma once

#include <Eigen/Dense>

namespace bundlekit {

/// Operator norm: largest singular value.
double op_norm(const Eigen::MatrixXcd& m);

/// Orthonormal basis of the range of an (approximate) rank-k matrix, from a
/// column-pivoted QR.  Columns span the same subspace up to the pivot
/// tolerance; any other basis differs by a right unitary factor.
Eigen::MatrixXcd range_basis(const Eigen::MatrixXcd& m, int rank);

}  // namespace bundlekit
