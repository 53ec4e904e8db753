#include <doctest.h>

#include <cmath>

#include "bundlekit/equivalence.hpp"
#include "bundlekit/fourier.hpp"

using namespace bundlekit;

namespace {

struct Setup {
  ManifoldModel model;
  PartitionOfUnity pou;
};

Setup sixteen_member(int n = 256) {
  Setup s{ManifoldModel::build(ModelKind::FlatTorus, 1, {2.0 * M_PI}, {n}), {}};
  s.pou = build_partition(s.model, ball_cover(s.model, M_PI / 8), M_PI / 8);
  return s;
}

ProjectionField gentle_projector(const ManifoldModel& m, int dim, int rank, double amp,
                                 std::uint64_t seed) {
  Rng rng(seed);
  C1Field phase = real_fourier_scalar(m, 2, rng);
  double dsup = 0.0;
  for (std::size_t p = 0; p < m.num_points(); ++p)
    dsup = std::max(dsup, phase.deriv.fiber_norm(p));
  if (dsup > 0.0) phase = scale(amp / dsup, phase);
  return make_projection_field(
      conjugated_projector(gauge_exponential(phase, random_hermitian(dim, rng)), rank));
}

}  // namespace

TEST_CASE("constant projection: the equivalence map is the weighted inclusion") {
  const Setup s = sixteen_member(128);
  const ProjectionField constant =
      make_projection_field(make_constant(s.model, (Matrix(2, 2) << 1, 0, 0, 0).finished()));
  const CheckReport report = surjectivity_roundtrip(s.model, constant, s.pou, 1.5, 9);
  CHECK(report.all_pass());
  CHECK(report.find("equivalence_gram")->measured < 1e-12);
}

TEST_CASE("rotating projections are unitarily equivalent to their image-bundle modules") {
  const Setup s = sixteen_member();
  for (std::uint64_t seed : {2u, 4u, 6u}) {
    const ProjectionField proj = gentle_projector(s.model, 2, 1, 0.1, seed);
    const CheckReport report = surjectivity_roundtrip(s.model, proj, s.pou, 2.0, seed);
    CHECK(report.all_pass());
    CHECK(report.find("equivalence_gram")->measured < 1e-8);
    CHECK(report.find("equivalence_range")->measured < 1e-8);
  }
}

TEST_CASE("identity morphism reconstructs the bundle transitions") {
  const Setup s = sixteen_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 31);
  const BundleMorphism ident = identity_morphism(bundle);
  // The identity's overlap data are the transitions themselves.
  for (std::size_t p = 0; p < s.model.num_points(); p += 13)
    CHECK((ident.overlap[2][5].value.at(p) - bundle.transitions[2][5].value.at(p))
              .cwiseAbs().maxCoeff() < 1e-12);

  const BundleMorphism second = identity_morphism(bundle);
  const CheckReport report = faithfulness_roundtrip(ident, second, s.pou, 7);
  CHECK(report.all_pass());
}

TEST_CASE("gauge morphisms survive the module round trip") {
  const Setup s = sixteen_member();
  Rng rng(97);
  const BundleSpec src = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 41);
  const BundleSpec dst = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 43);
  const BundleMorphism alpha = global_morphism(src, dst, fourier_matrix(s.model, 2, 2, 2, rng));
  const BundleMorphism beta = global_morphism(dst, src, fourier_matrix(s.model, 2, 2, 2, rng));

  CHECK(morphism_compatibility_error(alpha) < 1e-10);

  const CheckReport report = faithfulness_roundtrip(alpha, beta, s.pou, 11);
  CHECK(report.all_pass());
  CHECK(report.find("morphism_reconstruction")->measured < 1e-8);
  CHECK(report.find("reconstruction_coverage")->measured == doctest::Approx(0.0));
}

TEST_CASE("incompatible overlap data is rejected") {
  const Setup s = sixteen_member(128);
  const BundleSpec src = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 51);
  const BundleSpec dst = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 53);
  Rng rng(101);
  BundleMorphism broken = global_morphism(src, dst, fourier_matrix(s.model, 2, 2, 2, rng));
  broken.overlap[1][2] = fourier_matrix(s.model, 2, 2, 1, rng);  // arbitrary junk
  CHECK(morphism_compatibility_error(broken) > 1e-6);
  CHECK_THROWS_AS(faithfulness_roundtrip(broken, identity_morphism(src), s.pou, 3),
                  std::invalid_argument);
}

TEST_CASE("distinct morphisms are separated by probe sections") {
  const Setup s = sixteen_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 61);
  const BundleMorphism one = identity_morphism(bundle);
  const BundleMorphism two = global_morphism(
      bundle, bundle, make_constant(s.model, 2.0 * Matrix::Identity(2, 2)));
  CHECK(injectivity_check(one, two, s.pou).find("injectivity")->pass);
  CHECK(injectivity_check(one, one, s.pou).find("injectivity")->pass);
  CHECK(injectivity_check(one, one, s.pou).find("injectivity_margin")->measured < 1e-12);
}

TEST_CASE("morphisms differing on one chart interior are separated") {
  const Setup s = sixteen_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::Trivial, 2, 1);
  const BundleMorphism base = identity_morphism(bundle);

  // Perturb the data consistently by a globally supported bump morphism that
  // concentrates on chart 3's interior.
  C1Field bumped = make_constant(s.model, Matrix::Identity(2, 2));
  const C1Field& bump = s.pou.sqrt_bumps[3];
  for (std::size_t p = 0; p < s.model.num_points(); ++p) {
    const double b = bump.value.at(p)(0, 0).real();
    bumped.value.at(p) *= (1.0 + 0.5 * b * b);
    for (int k = 0; k < s.model.dim(); ++k)
      bumped.deriv.component(k, p) = Matrix::Identity(2, 2) *
                                     (bump.deriv.component(k, p)(0, 0) * b);
  }
  const BundleMorphism perturbed = global_morphism(bundle, bundle, bumped);
  CHECK(injectivity_check(base, perturbed, s.pou).find("injectivity")->pass);
}
