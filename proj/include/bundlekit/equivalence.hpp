#pragma once

#include <cstdint>

#include "bundlekit/imagebundle.hpp"
#include "bundlekit/partition.hpp"
#include "bundlekit/report.hpp"
#include "bundlekit/stabilize.hpp"

namespace bundlekit {

/// Module -> bundle -> module: builds the image bundle of the projection
/// field, the block map A with blocks w_i* P sqrt(chi_i), and verifies that A
/// is a fiberwise unitary between the range of P and the range of the
/// stabilized projection of the image bundle (A*A = P, AA* = P_stab), plus
/// the finiteness bound on the block-field norm.
CheckReport surjectivity_roundtrip(const ManifoldModel& model, const ProjectionField& proj,
                                   const PartitionOfUnity& pou, double radius_candidate,
                                   std::uint64_t seed);

/// A bundle morphism as overlap operator fields, target frame i <- source
/// frame j, compatible with both cocycles.
struct BundleMorphism {
  const BundleSpec* source = nullptr;
  const BundleSpec* target = nullptr;
  std::vector<std::vector<C1Field>> overlap;  // [i][j]
};

/// Morphism from a globally defined field conjugated by the two gauge
/// systems; compatibility holds by construction.
BundleMorphism global_morphism(const BundleSpec& source, const BundleSpec& target,
                               const C1Field& global);

BundleMorphism identity_morphism(const BundleSpec& bundle);

double morphism_compatibility_error(const BundleMorphism& alpha);

/// Block field of the induced module map, blocks alpha_ij sqrt(chi_i chi_j).
C1Field module_morphism_field(const BundleMorphism& alpha, const PartitionOfUnity& pou);

/// Bundle morphism -> module map -> bundle morphism: adjoint compatibility on
/// random section pairs, functoriality against a second morphism, probe-based
/// reconstruction of the overlap data on the region where some bump is
/// bounded below, and the norm chain through the reconstruction constants.
CheckReport faithfulness_roundtrip(const BundleMorphism& alpha, const BundleMorphism& beta,
                                   const PartitionOfUnity& pou, std::uint64_t seed,
                                   int section_trials = 5);

/// Distinct overlap data must be separated by some probe section; equal data
/// must not be.
CheckReport injectivity_check(const BundleMorphism& a, const BundleMorphism& b,
                              const PartitionOfUnity& pou);

}  // namespace bundlekit
