#include <doctest.h>

#include <cmath>

#include "bundlekit/fourier.hpp"
#include "bundlekit/opspace.hpp"
#include "bundlekit/stabilize.hpp"

using namespace bundlekit;

namespace {

struct Setup {
  ManifoldModel model;
  PartitionOfUnity pou;
};

Setup eight_member(int n = 256) {
  Setup s{ManifoldModel::build(ModelKind::FlatTorus, 1, {2.0 * M_PI}, {n}), {}};
  s.pou = build_partition(s.model, ball_cover(s.model, M_PI / 4), M_PI / 4);
  return s;
}

double pou_sqrt(const PartitionOfUnity& pou, std::size_t i, std::size_t p) {
  return pou.sqrt_bumps[i].value.at(p)(0, 0).real();
}

}  // namespace

TEST_CASE("trivial bundle has identity transitions and zero derivative bound") {
  const Setup s = eight_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::Trivial, 2, 1);
  CHECK(bundle.c_tau == doctest::Approx(0.0));
  CHECK(verify_bundle(bundle).all_pass());
}

TEST_CASE("gauge bundles satisfy the cocycle identity by construction") {
  const Setup s = eight_member(128);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, seed);
    const CheckReport report = verify_bundle(bundle);
    CHECK(report.all_pass());
    CHECK(report.find("bundle_cocycle")->measured < 1e-10);
    CHECK(bundle.c_tau > 0.0);
  }
}

TEST_CASE("non-unitary generators are rejected") {
  const Setup s = eight_member(128);
  CHECK_THROWS_AS(make_bundle(s.model, s.pou, BundleGenerator::NonUnitary, 2, 5),
                  std::invalid_argument);
}

TEST_CASE("charts must contain the doubled bump supports") {
  const Setup s = eight_member(128);
  CHECK_THROWS_AS(make_bundle(s.model, s.pou, BundleGenerator::Trivial, 2, 1, 1.9),
                  std::invalid_argument);
  // A partition too coarse for any admissible chart is rejected outright.
  const PartitionOfUnity wide =
      build_partition(s.model, ball_cover(s.model, M_PI / 2), M_PI / 2);
  CHECK_THROWS_AS(make_bundle(s.model, wide, BundleGenerator::Trivial, 2, 1),
                  std::invalid_argument);
}

TEST_CASE("embedding a constant section of the trivial bundle is isometric") {
  const Setup s = eight_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::Trivial, 2, 1);
  Matrix xi = Matrix::Zero(2, 1);
  xi(0, 0) = Complex(0.6, 0.8);
  const LocalSections ls = local_sections_from_global(bundle, make_constant(s.model, xi));
  const C1Field embedded = stabilize_embed(s.pou, ls);
  for (std::size_t p = 0; p < s.model.num_points(); ++p)
    CHECK(embedded.value.at(p).norm() == doctest::Approx(1.0).epsilon(1e-12));

  const C1Field zero = stabilize_embed(
      s.pou, local_sections_from_global(bundle, make_zero(s.model, 2, 1)));
  CHECK(field_norm_1(zero) == doctest::Approx(0.0));
}

TEST_CASE("embedding preserves the hermitian form") {
  const Setup s = eight_member(128);
  Rng rng(61);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 11);
  const LocalSections a = random_local_sections(bundle, rng);
  const LocalSections b = random_local_sections(bundle, rng);
  const C1Field ea = stabilize_embed(s.pou, a);
  const C1Field eb = stabilize_embed(s.pou, b);
  for (std::size_t p = 0; p < s.model.num_points(); ++p) {
    // Frame-0 representatives give the intrinsic pairing for gauge bundles.
    const Complex intrinsic = (a.local[0].value.at(p).adjoint() * b.local[0].value.at(p))(0, 0);
    const Complex stabilized = (ea.value.at(p).adjoint() * eb.value.at(p))(0, 0);
    CHECK(std::abs(intrinsic - stabilized) < 1e-10);
  }
}

TEST_CASE("embedding rejects incompatible local data") {
  const Setup s = eight_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 23);
  Rng rng(77);
  LocalSections ls = random_local_sections(bundle, rng);
  ls.local[3] = fourier_matrix(s.model, 2, 1, 2, rng);  // unrelated data on chart 3
  CHECK(compatibility_error(ls) > 1e-6);
  CHECK_THROWS_AS(stabilize_embed(s.pou, ls), std::invalid_argument);
}

TEST_CASE("projecting inverts embedding") {
  const Setup s = eight_member();
  Rng rng(67);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 13);
  const LocalSections ls = random_local_sections(bundle, rng);
  const C1Field embedded = stabilize_embed(s.pou, ls);
  const LocalSections back = stabilize_project(bundle, s.pou, embedded);
  double err = 0.0;
  for (std::size_t i = 0; i < bundle.size(); ++i)
    for (std::size_t p : bundle.charts[i].window.points)
      err = std::max(err,
                     (back.local[i].value.at(p) - ls.local[i].value.at(p)).cwiseAbs().maxCoeff());
  CHECK(err < 1e-10);
}

TEST_CASE("projection of a single nonzero block transports it everywhere") {
  const Setup s = eight_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 17);
  Rng rng(71);
  const C1Field t1 = fourier_matrix(s.model, 2, 1, 2, rng);
  C1Field block = make_zero(s.model, 16, 1);
  for (std::size_t p = 0; p < s.model.num_points(); ++p)
    block.value.at(p).middleRows(2, 2) = t1.value.at(p);  // block index 1
  const LocalSections out = stabilize_project(bundle, s.pou, block);
  for (std::size_t j = 0; j < bundle.size(); ++j)
    for (std::size_t p : bundle.charts[j].window.points) {
      if (!bundle.overlap(j, 1, p)) continue;
      const Matrix expect = bundle.transitions[j][1].value.at(p) * t1.value.at(p) *
                            pou_sqrt(s.pou, 1, p);
      CHECK((out.local[j].value.at(p) - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("projecting is a module map") {
  const Setup s = eight_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, 19);
  Rng rng(73);
  const C1Field block = fourier_matrix(s.model, 16, 1, 2, rng);
  const C1Field f = fourier_scalar(s.model, 2, rng);
  const LocalSections lhs = stabilize_project(bundle, s.pou, mul(block, f));
  LocalSections rhs = stabilize_project(bundle, s.pou, block);
  for (std::size_t j = 0; j < bundle.size(); ++j) {
    const C1Field scaled = mul(rhs.local[j], f);
    for (std::size_t p : bundle.charts[j].window.points)
      CHECK((lhs.local[j].value.at(p) - scaled.value.at(p)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("trivial stabilized projection is the bump Gram matrix of rank d") {
  const Setup s = eight_member(128);
  const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::Trivial, 2, 1);
  const StabilizedProjection proj = build_projection(bundle, s.pou);
  for (std::size_t p = 0; p < s.model.num_points(); p += 17) {
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) {
        const Matrix block = proj.block_field.value.at(p).block(2 * i, 2 * j, 2, 2);
        const double w = pou_sqrt(s.pou, i, p) * pou_sqrt(s.pou, j, p);
        CHECK((block - w * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
      }
  }
  CHECK(verify_projection(proj, bundle, s.pou, 99).all_pass());
}

TEST_CASE("stabilization works on the 2-torus") {
  const ManifoldModel m =
      ManifoldModel::build(ModelKind::FlatTorus, 2, {2.0 * M_PI, 2.0 * M_PI}, {24, 24});
  const double eps = 1.2;
  const PartitionOfUnity pou = build_partition(m, ball_cover(m, eps), eps);
  const BundleSpec bundle = make_bundle(m, pou, BundleGenerator::GaugeFourier, 1, 7, 2.3);
  const StabilizedProjection proj = build_projection(bundle, pou);
  const CheckReport report = verify_projection(proj, bundle, pou, 7);
  CHECK(report.all_pass());
}

TEST_CASE("stabilized projections of twisted bundles pass all checks") {
  const Setup s = eight_member();
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    const BundleSpec bundle = make_bundle(s.model, s.pou, BundleGenerator::GaugeFourier, 2, seed);
    const StabilizedProjection proj = build_projection(bundle, s.pou);
    const CheckReport report = verify_projection(proj, bundle, s.pou, seed);
    CHECK(report.all_pass());
    // Bound has real slack but is not vacuous.
    CHECK(report.find("projection_deriv_bound")->measured > 0.0);
  }
}
