#pragma once

#include <cstdint>
#include <vector>

#include "bundlekit/field.hpp"
#include "bundlekit/partition.hpp"
#include "bundlekit/report.hpp"
#include "bundlekit/rng.hpp"

namespace bundlekit {

/// A finite cover of normal charts with unitary transition fields between
/// them.  Transitions are stored on the full grid but are only meaningful on
/// the chart overlaps; every consumer weights them by bump products whose
/// supports sit inside those overlaps.
struct BundleSpec {
  const ManifoldModel* model = nullptr;
  std::vector<std::size_t> centers;
  double radius = 0.0;
  int fiber_dim = 0;
  std::vector<Chart> charts;
  std::vector<std::vector<C1Field>> transitions;  // tau[i][j], frame j -> frame i
  double c_tau = 0.0;                             // sup over overlaps of ||d tau||

  std::size_t size() const { return centers.size(); }
  bool overlap(std::size_t i, std::size_t j, std::size_t p) const {
    return charts[i].window.member[p] && charts[j].window.member[p];
  }
};

enum class BundleGenerator {
  Trivial,      // tau = identity
  GaugeFourier, // tau_ij = u_i u_j* from random unitary gauge fields
  NonUnitary,   // deliberately broken generator; construction must reject it
};

/// Charts of radius `radius_scale * eps` (capped below the injectivity
/// radius) at the partition centers; validates unitarity and the cocycle
/// identity before returning.
BundleSpec make_bundle(const ManifoldModel& model, const PartitionOfUnity& pou,
                       BundleGenerator generator, int fiber_dim, std::uint64_t seed,
                       double radius_scale = 2.5);

CheckReport verify_bundle(const BundleSpec& bundle);

/// Section of a bundle as compatible local representatives s_i over the
/// charts: s_i = tau_ij s_j on overlaps.
struct LocalSections {
  const BundleSpec* bundle = nullptr;
  std::vector<C1Field> local;
};

/// Local data of a globally defined smooth column field, s_i = gauge_i * s;
/// compatible by construction for gauge bundles.
LocalSections local_sections_from_global(const BundleSpec& bundle, const C1Field& global);

LocalSections random_local_sections(const BundleSpec& bundle, Rng& rng, int degree = 3);

double compatibility_error(const LocalSections& s);

/// Block column with i-th block s_i sqrt(chi_i); isometric on fibers since
/// the bumps square-sum to one.
C1Field stabilize_embed(const PartitionOfUnity& pou, const LocalSections& s);

/// Left inverse of the embedding: s_j = sum_i tau_ji t_i sqrt(chi_i).
LocalSections stabilize_project(const BundleSpec& bundle, const PartitionOfUnity& pou,
                                const C1Field& block_section);

/// The block projection field P_ij = tau_ij sqrt(chi_i chi_j) whose range is
/// the embedded copy of the section module.
struct StabilizedProjection {
  C1Field block_field;   // (m d) x (m d)
  int blocks = 0;
  int fiber_dim = 0;
  double deriv_sup = 0.0;  // sup ||dP||
};

StabilizedProjection build_projection(const BundleSpec& bundle, const PartitionOfUnity& pou);

/// P^2 = P = P*, spectrum in {0,1}, constant rank, P = embed o project, the
/// fiberwise isometry of the embedding, and the derivative bound
/// sup ||dP|| <= K^{3/2} (C_tau + C_chi).
CheckReport verify_projection(const StabilizedProjection& proj, const BundleSpec& bundle,
                              const PartitionOfUnity& pou, std::uint64_t seed);

}  // namespace bundlekit
