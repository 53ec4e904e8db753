#include <doctest.h>

#include <cmath>

#include "bundlekit/fourier.hpp"
#include "bundlekit/opspace.hpp"

using namespace bundlekit;

namespace {

ManifoldModel circle(int n = 256) {
  return ManifoldModel::build(ModelKind::FlatTorus, 1, {2.0 * M_PI}, {n});
}

ManifoldModel torus2(int n = 32) {
  return ManifoldModel::build(ModelKind::FlatTorus, 2, {2.0 * M_PI, 2.0 * M_PI}, {n, n});
}

// Mode field e^{i k theta} times a constant matrix, with exact derivative.
C1Field mode_field(const ManifoldModel& m, int k, const Matrix& coeff) {
  C1Field out = make_zero(m, static_cast<int>(coeff.rows()), static_cast<int>(coeff.cols()));
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    const Complex e = std::exp(Complex(0.0, k * m.coords(p)[0]));
    out.value.at(p) = e * coeff;
    out.deriv.component(0, p) = Complex(0.0, double(k)) * e * coeff;
  }
  return out;
}

// Independent oracle: power iteration on m* m.
double power_iteration_norm(const Matrix& m, int iters = 20000) {
  const Matrix g = m.adjoint() * m;
  Vector v = Vector::Ones(g.rows());
  v.normalize();
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    const Vector w = g * v;
    const double next = w.norm();
    if (std::abs(next - lambda) < 1e-15 * std::max(1.0, next) && i > 64) {
      lambda = next;
      break;
    }
    lambda = next;
    v = w / next;
  }
  return std::sqrt(lambda);
}

}  // namespace

TEST_CASE("op_norm on canonical matrices") {
  CHECK(op_norm(Matrix::Identity(2, 2)) == doctest::Approx(1.0));
  Matrix shift = Matrix::Zero(2, 2);
  shift(0, 1) = 1.0;
  CHECK(op_norm(shift) == doctest::Approx(1.0));
}

TEST_CASE("op_norm matches a power-iteration oracle") {
  Rng rng(17);
  for (int t = 0; t < 5; ++t) {
    Matrix a(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) a(i, j) = rng.complex_normal();
    const double svd = op_norm(a);
    const double power = power_iteration_norm(a);
    CHECK(std::abs(svd - power) / power < 1e-8);
  }
}

TEST_CASE("field_norm_1 on closed-form fields") {
  const ManifoldModel m = circle();
  CHECK(field_norm_1(make_constant(m, Matrix::Constant(1, 1, Complex(0.0, -2.5)))) ==
        doctest::Approx(2.5));
  CHECK(field_norm_1(mode_field(m, 1, Matrix::Identity(1, 1))) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));

  // sin: |f|^2 + |df|^2 = 1 everywhere.
  C1Field s = make_zero(m, 1, 1);
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    const double x = m.coords(p)[0];
    s.value.at(p)(0, 0) = std::sin(x);
    s.deriv.component(0, p)(0, 0) = std::cos(x);
  }
  CHECK(field_norm_1(s) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(field_norm_1(make_zero(m, 3, 3)) == doctest::Approx(0.0));
}

TEST_CASE("jet norm of a rotating unitary line bundle is the golden ratio") {
  const ManifoldModel m = circle();
  const C1Field a = mode_field(m, 1, Matrix::Identity(2, 2));
  // jet(a) is [[e,0],[ie,e]] tensor I2; singular values are the golden ratio
  // and its inverse.
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  CHECK(morphism_norm_1(a) == doctest::Approx(golden).epsilon(1e-10));
  CHECK(morphism_norm_1(make_constant(m, Matrix::Identity(3, 3))) == doctest::Approx(1.0));
  CHECK(morphism_norm_1(make_zero(m, 2, 2)) == doctest::Approx(0.0));
}

TEST_CASE("jet norm sandwich holds on random fields") {
  const ManifoldModel m = circle(128);
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const C1Field a = fourier_matrix(m, 3, 3, 3, rng);
    CHECK(sandwich_check(a).all_pass());
  }
  // Constant unitary: equality on the right at 1.
  const C1Field u = make_constant(m, random_unitary(3, rng));
  CHECK(morphism_norm_1(u) == doctest::Approx(1.0));
  // Large derivative keeps the inequality intact.
  const C1Field wild = fourier_matrix(m, 2, 2, 5, rng, 20.0);
  CHECK(sandwich_check(wild).all_pass());
}

TEST_CASE("adjoint derivative ratio is exactly one on a circle") {
  const ManifoldModel m = circle(128);
  Rng rng(23);
  for (int t = 0; t < 10; ++t) {
    const C1Field a = fourier_matrix(m, 4, 4, 3, rng);
    const CheckReport r = adjoint_derivative_check(a);
    CHECK(r.all_pass());
    CHECK(r.find("adjoint_derivative_ratio")->measured == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("adjoint derivative ratio respects sqrt(N) on the 2-torus") {
  const ManifoldModel m = torus2();
  Rng rng(29);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const C1Field a = fourier_matrix(m, 4, 4, 3, rng);
    const CheckReport r = adjoint_derivative_check(a);
    CHECK(r.all_pass());
    worst = std::max(worst, r.find("adjoint_derivative_ratio")->measured);
  }
  CHECK(worst <= std::sqrt(2.0) + 1e-6);

  // Hermitian-valued fields have ratio exactly one.
  const C1Field h = fourier_matrix(m, 3, 3, 2, rng);
  const C1Field sym = scale(0.5, add(h, adjoint(h)));
  CHECK(adjoint_derivative_check(sym).find("adjoint_derivative_ratio")->measured ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("product norm bound and jet multiplicativity") {
  const ManifoldModel m = circle(128);
  Rng rng(31);
  const C1Field one = make_constant(m, Matrix::Identity(1, 1));
  CHECK(product_norm_check(one, one).all_pass());
  for (int t = 0; t < 100; ++t) {
    const C1Field f = fourier_matrix(m, 2, 2, 3, rng);
    const C1Field g = fourier_matrix(m, 2, 2, 3, rng);
    CHECK(product_norm_check(f, g).all_pass());
  }
}

TEST_CASE("the single-mode pair attains the product bound profile") {
  const ManifoldModel m = circle();
  const C1Field f = mode_field(m, 1, Matrix::Identity(1, 1));
  const C1Field fg = mul(f, f);
  CHECK(field_norm_1(f) * field_norm_1(f) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(field_norm_1(fg) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-6));
  CHECK(product_norm_check(f, f).all_pass());
}

TEST_CASE("norm axioms for the jet norm") {
  const ManifoldModel m = circle(128);
  Rng rng(37);
  for (int t = 0; t < 10; ++t) {
    const C1Field a = fourier_matrix(m, 2, 2, 2, rng);
    const C1Field b = fourier_matrix(m, 2, 2, 2, rng);
    CHECK(morphism_norm_1(add(a, b)) <= morphism_norm_1(a) + morphism_norm_1(b) + 1e-10);
    const Complex lam(1.5, -2.0);
    CHECK(morphism_norm_1(scale(lam, a)) ==
          doctest::Approx(std::abs(lam) * morphism_norm_1(a)).epsilon(1e-10));

    // Direct sum: embed a and b block-diagonally; jet norms take the max.
    C1Field sum = make_zero(m, 4, 4);
    for (std::size_t p = 0; p < m.num_points(); ++p) {
      sum.value.at(p).topLeftCorner(2, 2) = a.value.at(p);
      sum.value.at(p).bottomRightCorner(2, 2) = b.value.at(p);
      sum.deriv.component(0, p).topLeftCorner(2, 2) = a.deriv.component(0, p);
      sum.deriv.component(0, p).bottomRightCorner(2, 2) = b.deriv.component(0, p);
    }
    CHECK(morphism_norm_1(sum) ==
          doctest::Approx(std::max(morphism_norm_1(a), morphism_norm_1(b))).epsilon(1e-10));

    // Contraction by constant matrices.
    const Matrix v = random_unitary(2, rng) * 1.7;
    const Matrix w = random_unitary(2, rng) * 0.4;
    const C1Field vaw = mul(mul(make_constant(m, v), a), make_constant(m, w));
    CHECK(morphism_norm_1(vaw) <=
          op_norm(v) * morphism_norm_1(a) * op_norm(w) + 1e-10);
    CHECK(field_norm_1(vaw) <= op_norm(v) * field_norm_1(a) * op_norm(w) + 1e-10);
  }
}

TEST_CASE("amplified involution stays below sqrt(N) and identity at one") {
  const ManifoldModel m2 = torus2(24);
  const AmplifyResult inv = cb_amplify(m2, AmplifiedMap::Involution, 3, 50, 2024);
  CHECK(inv.measured <= std::sqrt(2.0) + 1e-6);
  CHECK(inv.measured > 1.0);  // the involution does expand somewhere

  const ManifoldModel m1 = circle(64);
  const AmplifyResult inv1 = cb_amplify(m1, AmplifiedMap::Involution, 2, 50, 2025);
  CHECK(inv1.measured <= 1.0 + 1e-6);

  const AmplifyResult id = cb_amplify(m1, AmplifiedMap::Identity, 4, 10, 1);
  CHECK(id.measured == doctest::Approx(1.0));

  const AmplifyResult prod = cb_amplify(m1, AmplifiedMap::Multiplication, 2, 50, 2026);
  CHECK(prod.measured <= std::sqrt(5.0) + 1e-6);
}
