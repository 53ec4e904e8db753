#pragma once

#include <vector>

#include "bundlekit/field.hpp"
#include "bundlekit/report.hpp"

namespace bundlekit {

/// Bounded partition of unity subordinate to the doubled balls B_{2 eps}(y_i):
/// chi_i = bump_i^2 / sum_j bump_j^2, so sqrt(chi_i) is smooth, sum chi_i = 1
/// up to roundoff, at most `multiplicity` supports meet at any point, and the
/// derivatives of the square roots are uniformly bounded.
struct PartitionOfUnity {
  const ManifoldModel* model = nullptr;
  double epsilon = 0.0;
  std::vector<std::size_t> centers;
  std::vector<C1Field> sqrt_bumps;  // 1x1, exact derivatives
  int multiplicity = 0;             // K
  double deriv_bound_fd = 0.0;      // C_chi measured with finite differences
  double deriv_bound_analytic = 0.0;

  std::size_t size() const { return centers.size(); }
  double chi(std::size_t i, std::size_t p) const {
    const double b = sqrt_bumps[i].value.at(p)(0, 0).real();
    return b * b;
  }
};

/// Centers on a regular sublattice with per-axis pitch <= eps, so the eps
/// balls cover the model (box: its support region) and the doubled balls have
/// finite multiplicity.  The cover is verified pointwise before returning.
std::vector<std::size_t> ball_cover(const ManifoldModel& model, double eps);

PartitionOfUnity build_partition(const ManifoldModel& model, std::vector<std::size_t> centers,
                                 double eps);

/// Pointwise sum error, support containment in the doubled balls,
/// multiplicity, and finiteness of the square-root derivative bound.
CheckReport verify_partition(const PartitionOfUnity& pou);

/// Smallest over the grid of the largest bump weight; strictly positive for
/// any covering partition and used by the reconstruction probes.
double partition_floor(const PartitionOfUnity& pou);

/// sup_i ||d chi_i|| (derivative of chi itself, not of its square root).
double chi_derivative_bound(const PartitionOfUnity& pou);

}  // namespace bundlekit
