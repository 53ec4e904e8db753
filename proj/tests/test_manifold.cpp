#include <doctest.h>

#include <cmath>
#include <functional>

#include "bundlekit/field.hpp"
#include "bundlekit/grid.hpp"
#include "bundlekit/rng.hpp"

using namespace bundlekit;

namespace {

ManifoldModel circle(int n = 256) {
  return ManifoldModel::build(ModelKind::FlatTorus, 1, {2.0 * M_PI}, {n});
}

Field sampled(const ManifoldModel& m, const std::function<Complex(double)>& f) {
  Field out(m, 1, 1);
  for (std::size_t p = 0; p < m.num_points(); ++p) out.at(p)(0, 0) = f(m.coords(p)[0]);
  return out;
}

}  // namespace

TEST_CASE("build_model computes spacing and injectivity radius") {
  const ManifoldModel m = ManifoldModel::build(ModelKind::FlatTorus, 1, {2.0 * M_PI}, {64});
  CHECK(m.spacing()[0] == doctest::Approx(2.0 * M_PI / 64));
  CHECK(m.injectivity_radius() == doctest::Approx(M_PI));

  const ManifoldModel m2 = ManifoldModel::build(ModelKind::FlatTorus, 2,
                                                {2.0 * M_PI, 2.0 * M_PI}, {32, 32});
  CHECK(m2.injectivity_radius() == doctest::Approx(M_PI));
  CHECK(m2.num_points() == 32 * 32);
}

TEST_CASE("build_model rejects coarse grids and bad extents") {
  CHECK_THROWS_AS(ManifoldModel::build(ModelKind::EuclideanBox, 2, {4.0, 4.0}, {3, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ManifoldModel::build(ModelKind::FlatTorus, 1, {-1.0}, {16}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ManifoldModel::build(ModelKind::FlatTorus, 2, {1.0}, {16, 16}),
                  std::invalid_argument);
}

TEST_CASE("geodesic distance wraps on the torus") {
  const ManifoldModel m = circle(64);
  CHECK(m.distance(std::vector<double>{0.0}, std::vector<double>{M_PI / 2}) ==
        doctest::Approx(M_PI / 2));
  CHECK(m.distance(std::vector<double>{0.1}, std::vector<double>{2.0 * M_PI - 0.1}) ==
        doctest::Approx(0.2));

  const ManifoldModel box = ManifoldModel::build(ModelKind::EuclideanBox, 2, {8.0, 8.0}, {16, 16});
  const GridPoint a = box.point({0, 0});
  const GridPoint b = box.point({6, 8});  // coords (3, 4)
  CHECK(b.coords[0] == doctest::Approx(3.0));
  CHECK(geodesic_distance(box, a, b) == doctest::Approx(5.0));
}

TEST_CASE("geodesic distance satisfies the triangle inequality") {
  const ManifoldModel m = ManifoldModel::build(ModelKind::FlatTorus, 2, {2.0 * M_PI, 4.0},
                                               {24, 24});
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t a = rng.integer(m.num_points());
    const std::size_t b = rng.integer(m.num_points());
    const std::size_t c = rng.integer(m.num_points());
    CHECK(m.distance(a, c) <= m.distance(a, b) + m.distance(b, c) + 1e-12);
  }
}

TEST_CASE("derham of a constant field vanishes") {
  const ManifoldModel m = circle(64);
  const CotangentField df = derham(Field::constant(m, Matrix::Constant(2, 2, Complex(3.0, -1.0))));
  for (std::size_t p = 0; p < m.num_points(); ++p) CHECK(df.fiber_norm(p) == doctest::Approx(0.0));
}

TEST_CASE("derham reproduces analytic derivatives at second order") {
  const ManifoldModel m = circle(256);
  const double h = m.spacing()[0];

  const Field f = sampled(m, [](double x) { return Complex(std::sin(x), 0.0); });
  const CotangentField df = derham(f);
  double err = 0.0;
  for (std::size_t p = 0; p < m.num_points(); ++p)
    err = std::max(err, std::abs(df.component(0, p)(0, 0) - std::cos(m.coords(p)[0])));
  CHECK(err <= h * h);

  const int k = 3;
  const Field g = sampled(m, [&](double x) { return std::exp(Complex(0.0, k * x)); });
  const CotangentField dg = derham(g);
  double gerr = 0.0;
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    const Complex expect = Complex(0.0, double(k)) * std::exp(Complex(0.0, k * m.coords(p)[0]));
    gerr = std::max(gerr, std::abs(dg.component(0, p)(0, 0) - expect));
    CHECK(dg.fiber_norm(p) == doctest::Approx(double(k)).epsilon(1e-3));
  }
  CHECK(gerr <= h * h * k * k * k);
}

TEST_CASE("derham is linear") {
  const ManifoldModel m = circle(128);
  const Field f = sampled(m, [](double x) { return std::exp(Complex(0.0, x)); });
  const Field g = sampled(m, [](double x) { return Complex(std::cos(2 * x), std::sin(x)); });
  Field combo(m, 1, 1);
  const Complex a(2.0, 1.0), b(-0.5, 3.0);
  for (std::size_t p = 0; p < m.num_points(); ++p)
    combo.at(p) = a * f.at(p) + b * g.at(p);
  const CotangentField dc = derham(combo), df = derham(f), dg = derham(g);
  for (std::size_t p = 0; p < m.num_points(); ++p)
    CHECK(std::abs(dc.component(0, p)(0, 0) -
                   (a * df.component(0, p)(0, 0) + b * dg.component(0, p)(0, 0))) < 1e-13);
}

TEST_CASE("finite differences obey the Leibniz rule at O(h^2)") {
  const ManifoldModel m = circle(256);
  const double h = m.spacing()[0];
  const Field f = sampled(m, [](double x) { return Complex(std::sin(x), 0.0); });
  const Field g = sampled(m, [](double x) { return Complex(std::cos(x), 0.0); });
  Field fg(m, 1, 1);
  for (std::size_t p = 0; p < m.num_points(); ++p) fg.at(p) = f.at(p)(0, 0) * g.at(p);
  const CotangentField dfg = derham(fg), df = derham(f), dg = derham(g);
  double err = 0.0;
  for (std::size_t p = 0; p < m.num_points(); ++p)
    err = std::max(err, std::abs(dfg.component(0, p)(0, 0) -
                                 f.at(p)(0, 0) * dg.component(0, p)(0, 0) -
                                 g.at(p)(0, 0) * df.component(0, p)(0, 0)));
  CHECK(err <= 2.0 * h * h);
}

TEST_CASE("cotangent norm is the stacked fiber norm") {
  const ManifoldModel m = ManifoldModel::build(ModelKind::FlatTorus, 2, {2.0 * M_PI, 2.0 * M_PI},
                                               {8, 8});
  CotangentField ct(m, 1, 1);
  ct.component(0, 0)(0, 0) = 3.0;
  ct.component(1, 0)(0, 0) = 4.0;
  CHECK(cotangent_norm(ct, 0) == doctest::Approx(5.0));
  CHECK(cotangent_norm(ct, 1) == doctest::Approx(0.0));

  const ManifoldModel c = circle(256);
  const CotangentField df = derham(sampled(c, [](double x) { return Complex(std::sin(x), 0.0); }));
  CHECK(df.fiber_norm(0) == doctest::Approx(1.0).epsilon(1e-4));  // cos(0)
}

TEST_CASE("normal charts wrap, clip, and respect the injectivity radius") {
  const ManifoldModel m = circle(64);
  const Chart chart = normal_chart(m, 0, M_PI / 4);
  for (std::size_t p : chart.window.points) {
    const double d = m.distance(p, std::size_t{0});
    CHECK(d < M_PI / 4);
  }
  // Wrapped points just below 2 pi are inside.
  CHECK(chart.window.member[63]);
  CHECK_THROWS_AS(normal_chart(m, 0, M_PI), std::invalid_argument);

  const ManifoldModel box = ManifoldModel::build(ModelKind::EuclideanBox, 1, {8.0}, {16});
  const Chart bc = normal_chart(box, 0, 2.0);
  for (std::size_t p : bc.window.points) CHECK(box.coords(p)[0] < 2.0);
  CHECK_FALSE(bc.window.interior[0]);  // edge point has no backward neighbor
}

TEST_CASE("chart coordinates are centered wrapped differences") {
  const ManifoldModel m = circle(64);
  const Chart chart = normal_chart(m, 0, M_PI / 4);
  const std::vector<double> lc = chart.local_coords(m, 63);
  CHECK(lc[0] == doctest::Approx(-m.spacing()[0]));
}
