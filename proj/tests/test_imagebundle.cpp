#include <doctest.h>

#include <cmath>

#include "bundlekit/fourier.hpp"
#include "bundlekit/imagebundle.hpp"
#include "bundlekit/opspace.hpp"

using namespace bundlekit;

namespace {

ManifoldModel circle(int n = 256) {
  return ManifoldModel::build(ModelKind::FlatTorus, 1, {2.0 * M_PI}, {n});
}

// Gently rotating projection field with sup||dP|| capped by 2 * amp.
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

TEST_CASE("projection fields are validated on construction") {
  const ManifoldModel m = circle(64);
  const ProjectionField constant =
      make_projection_field(make_constant(m, (Matrix(2, 2) << 1, 0, 0, 0).finished()));
  CHECK(constant.rank == 1);
  CHECK(constant.deriv_sup == doctest::Approx(0.0));

  CHECK_THROWS_AS(make_projection_field(make_constant(m, (Matrix(2, 2) << 1, 1, 0, 0).finished())),
                  std::invalid_argument);

  const ProjectionField winding = make_projection_field(winding_projector(m, 2));
  CHECK(winding.rank == 1);
  CHECK(winding.deriv_sup == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("select_radius follows the derivative rule") {
  const ManifoldModel m = circle(64);
  ProjectionField p = make_projection_field(winding_projector(m, 1));  // sup||dP|| = 1
  CHECK(select_radius(m, p, 10.0) == doctest::Approx(0.225));

  p.deriv_sup = 10.0;
  CHECK(select_radius(m, p, 10.0) == doctest::Approx(0.0225));

  p.deriv_sup = 0.0;
  CHECK(select_radius(m, p, 10.0) == doctest::Approx(0.9 * M_PI));
  CHECK(select_radius(m, p, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("projection drift stays below one half at the selected radius") {
  const ManifoldModel m = circle();
  const ProjectionField constant =
      make_projection_field(make_constant(m, (Matrix(2, 2) << 1, 0, 0, 0).finished()));
  const std::vector<std::size_t> centers = ball_cover(m, M_PI / 4);
  CHECK(drift_check(m, constant, 1.0, centers).find("projection_drift")->measured ==
        doctest::Approx(0.0));

  const ProjectionField rotating = make_projection_field(winding_projector(m, 2));
  const double r = select_radius(m, rotating, 10.0);
  const CheckReport report = drift_check(m, rotating, r, centers);
  CHECK(report.all_pass());
  CHECK(report.find("projection_drift")->measured < 0.5);
}

TEST_CASE("a tenfold inflated radius breaks the drift bound") {
  const ManifoldModel m = circle();
  const ProjectionField rotating = make_projection_field(winding_projector(m, 2));
  const double r = select_radius(m, rotating, 10.0);
  const CheckReport report = drift_check(m, rotating, 10.0 * r, ball_cover(m, M_PI / 4));
  CHECK_FALSE(report.find("projection_drift")->pass);
  CHECK(report.find("projection_drift")->measured >= 0.5);
}

TEST_CASE("inverse square root by eigendecomposition") {
  CHECK((inv_sqrt_eig(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-14);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 1.0;
  const Matrix r = inv_sqrt_eig(d);
  CHECK(r(0, 0).real() == doctest::Approx(0.5));
  CHECK(r(1, 1).real() == doctest::Approx(1.0));

  Rng rng(79);
  for (int t = 0; t < 5; ++t) {
    const Matrix spd = random_spd(6, 50.0, rng);
    const Matrix s = inv_sqrt_eig(spd);
    CHECK((s * spd * s - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
  }

  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(inv_sqrt_eig(bad), std::invalid_argument);
}

TEST_CASE("quadrature route matches the eigendecomposition route") {
  // Scalar identity: the full integral of lambda^{-1/2}/(lambda+1) is pi.
  const Matrix one = Matrix::Identity(1, 1);
  CHECK(std::abs(inv_sqrt_quad(one, 200)(0, 0).real() - 1.0) < 1e-12);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 1.0;
  CHECK((inv_sqrt_quad(d, 200) - inv_sqrt_eig(d)).cwiseAbs().maxCoeff() < 1e-8);

  CHECK((inv_sqrt_quad(Matrix::Identity(4, 4), 64) - Matrix::Identity(4, 4))
            .cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(inv_sqrt_quad(one, 8), std::invalid_argument);
}

TEST_CASE("quadrature error at least halves as nodes double") {
  Rng rng(83);
  for (int t = 0; t < 5; ++t) {
    const Matrix spd = random_spd(5, 1000.0, rng);
    const Matrix oracle = inv_sqrt_eig(spd);
    double prev = 1e300;
    for (int nodes : {16, 32, 64, 128}) {
      const double err = op_norm(inv_sqrt_quad(spd, nodes) - oracle) / op_norm(oracle);
      CHECK((err <= 0.5 * prev || err < 1e-12));
      prev = err;
    }
    CHECK(prev < 1e-6);
  }
}

TEST_CASE("frames are unitary with the identity Gram bound on constant fields") {
  const ManifoldModel m = circle(128);
  const ProjectionField constant =
      make_projection_field(make_constant(m, (Matrix(2, 2) << 1, 0, 0, 0).finished()));
  const FrameField frame = build_frame(m, constant, 0, 1.0);
  CHECK(frame.lambda_inv_sup == doctest::Approx(1.0));
  CHECK(frame.dw_sup == doctest::Approx(0.0));
  CHECK(frame_checks(m, frame, constant).all_pass());
}

TEST_CASE("frames of rotating projectors pass the derivative bounds") {
  const ManifoldModel m = circle();
  const ProjectionField proj = gentle_projector(m, 2, 1, 0.1, 7);
  const double r = select_radius(m, proj, 2.0);
  const FrameField frame = build_frame(m, proj, 0, r);
  const CheckReport report = frame_checks(m, frame, proj);
  CHECK(report.all_pass());
  CHECK(report.find("gram_inverse_bound")->measured < 2.0);
}

TEST_CASE("image bundles carry unitary cocycles bounded by the projection derivative") {
  const ManifoldModel m = circle();
  const PartitionOfUnity pou = build_partition(m, ball_cover(m, M_PI / 8), M_PI / 8);
  for (std::uint64_t seed : {3u, 5u, 8u, 13u, 21u}) {
    const ProjectionField proj = gentle_projector(m, 2, 1, 0.1, seed);
    const double r = select_radius(m, proj, 2.0);
    const ImageBundleResult ib = image_bundle(m, proj, r, pou);
    const CheckReport report = image_bundle_checks(ib, proj);
    CHECK(report.all_pass());
  }
  for (std::uint64_t seed : {34u, 55u}) {
    const ProjectionField proj = gentle_projector(m, 3, 2, 0.1, seed);
    const double r = select_radius(m, proj, 2.0);
    const ImageBundleResult ib = image_bundle(m, proj, r, pou);
    CHECK(image_bundle_checks(ib, proj).all_pass());
  }
}

TEST_CASE("image bundle of a constant projection is trivial") {
  const ManifoldModel m = circle(128);
  const PartitionOfUnity pou = build_partition(m, ball_cover(m, M_PI / 8), M_PI / 8);
  const ProjectionField constant =
      make_projection_field(make_constant(m, (Matrix(2, 2) << 1, 0, 0, 0).finished()));
  const ImageBundleResult ib = image_bundle(m, constant, 1.5, pou);
  CHECK(ib.bundle.c_tau == doctest::Approx(0.0));
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    if (!ib.bundle.transitions[0][1].vok(p)) continue;
    CHECK((ib.bundle.transitions[0][1].value.at(p) - Matrix::Identity(1, 1))
              .cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("image bundle machinery works on the 2-torus") {
  const ManifoldModel m =
      ManifoldModel::build(ModelKind::FlatTorus, 2, {2.0 * M_PI, 2.0 * M_PI}, {64, 64});
  const double eps = 1.15;
  const PartitionOfUnity pou = build_partition(m, ball_cover(m, eps), eps);
  Rng rng(131);
  C1Field phase = real_fourier_scalar(m, 2, rng);
  double dsup = 0.0;
  for (std::size_t p = 0; p < m.num_points(); ++p)
    dsup = std::max(dsup, phase.deriv.fiber_norm(p));
  phase = scale(0.04 / dsup, phase);
  const ProjectionField proj = make_projection_field(
      conjugated_projector(gauge_exponential(phase, random_hermitian(2, rng)), 1));

  const double r = select_radius(m, proj, 2.9);
  REQUIRE(r > 2.0 * eps + 2.0 * m.spacing_max());
  CheckReport report = drift_check(m, proj, r, pou.centers);
  const ImageBundleResult ib = image_bundle(m, proj, r, pou);
  report.merge(image_bundle_checks(ib, proj));
  report.merge(frame_checks(m, ib.frames.front(), proj));
  CHECK(report.all_pass());
}

TEST_CASE("image bundle rejects charts that cannot hold the bumps") {
  const ManifoldModel m = circle(128);
  const PartitionOfUnity pou = build_partition(m, ball_cover(m, M_PI / 4), M_PI / 4);
  const ProjectionField constant =
      make_projection_field(make_constant(m, (Matrix(2, 2) << 1, 0, 0, 0).finished()));
  CHECK_THROWS_AS(image_bundle(m, constant, 1.0, pou), std::invalid_argument);
}
