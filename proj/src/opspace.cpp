#include "bundlekit/opspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bundlekit/fourier.hpp"

namespace bundlekit {

Matrix jet_block(const C1Field& a, std::size_t p) {
  const int N = a.model().dim();
  const int r = a.rows(), c = a.cols();
  Matrix out = Matrix::Zero(r + N * r, c + N * c);
  out.topLeftCorner(r, c) = a.value.at(p);
  out.bottomLeftCorner(N * r, c) = a.deriv.stacked(p);
  for (int k = 0; k < N; ++k)
    out.block(r + k * r, c + k * c, r, c) = a.value.at(p);
  return out;
}

double field_norm_1_at(const C1Field& f, std::size_t p) {
  const double v = op_norm(f.value.at(p));
  const double d = f.deriv.fiber_norm(p);
  return std::sqrt(v * v + d * d);
}

double field_norm_1(const C1Field& f) {
  double sup = 0.0;
  for (std::size_t p = 0; p < f.model().num_points(); ++p) {
    if (!f.dok(p)) continue;
    sup = std::max(sup, field_norm_1_at(f, p));
  }
  return sup;
}

double morphism_norm_1(const C1Field& a) {
  double sup = 0.0;
  for (std::size_t p = 0; p < a.model().num_points(); ++p) {
    if (!a.dok(p)) continue;
    sup = std::max(sup, op_norm(jet_block(a, p)));
  }
  return sup;
}

CheckReport sandwich_check(const C1Field& a) {
  double worst_lower = 0.0, worst_upper = 0.0;
  for (std::size_t p = 0; p < a.model().num_points(); ++p) {
    if (!a.dok(p)) continue;
    const double v = op_norm(a.value.at(p));
    const double d = a.deriv.fiber_norm(p);
    const double j = op_norm(jet_block(a, p));
    worst_lower = std::max(worst_lower, 0.5 * (v + d) - j);
    worst_upper = std::max(worst_upper, j - (v + d));
  }
  CheckReport report;
  report.append(make_check("jet_norm_lower", "(||a||+||da||)/2 <= ||jet(a)|| pointwise",
                           worst_lower, 0.0, 1e-10));
  report.append(make_check("jet_norm_upper", "||jet(a)|| <= ||a||+||da|| pointwise",
                           worst_upper, 0.0, 1e-10));
  return report;
}

CheckReport adjoint_derivative_check(const C1Field& a, double tolerance, double denom_floor) {
  const C1Field astar = adjoint(a);
  double worst_ratio = 0.0;
  for (std::size_t p = 0; p < a.model().num_points(); ++p) {
    if (!a.dok(p)) continue;
    const double d = a.deriv.fiber_norm(p);
    if (d <= denom_floor) continue;
    worst_ratio = std::max(worst_ratio, astar.deriv.fiber_norm(p) / d);
  }
  CheckReport report;
  report.append(make_check("adjoint_derivative_ratio", "||d(a*)(x)|| <= sqrt(N) ||da(x)||",
                           worst_ratio, std::sqrt(double(a.model().dim())), tolerance));
  return report;
}

CheckReport product_norm_check(const C1Field& f, const C1Field& g) {
  const C1Field fg = mul(f, g);
  const double nf = field_norm_1(f);
  const double ng = field_norm_1(g);
  const double nfg = field_norm_1(fg);

  double jet_residual = 0.0;
  for (std::size_t p = 0; p < f.model().num_points(); ++p) {
    if (!fg.dok(p)) continue;
    const Matrix lhs = jet_block(fg, p);
    const Matrix rhs = jet_block(f, p) * jet_block(g, p);
    jet_residual = std::max(jet_residual, (lhs - rhs).cwiseAbs().maxCoeff());
  }

  CheckReport report;
  report.append(make_check("product_norm", "||f g||_1 <= sqrt(5) ||f||_1 ||g||_1", nfg,
                           std::sqrt(5.0) * nf * ng, 1e-10));
  report.append(make_check("jet_multiplicative", "jet(f g) = jet(f) jet(g) entrywise",
                           jet_residual, 0.0, 1e-12));
  return report;
}

AmplifyResult cb_amplify(const ManifoldModel& model, AmplifiedMap map, int level, int samples,
                         std::uint64_t seed, int degree) {
  if (level < 1) throw std::invalid_argument("amplification level must be >= 1");
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  Rng rng(seed);
  AmplifyResult result;
  result.level = level;
  result.samples = samples;
  const double sqrtN = std::sqrt(double(model.dim()));
  switch (map) {
    case AmplifiedMap::Identity:
      result.bound = 1.0;
      break;
    case AmplifiedMap::Involution:
      result.bound = sqrtN;
      break;
    case AmplifiedMap::Multiplication:
      result.bound = std::sqrt(5.0);
      break;
  }
  for (int s = 0; s < samples; ++s) {
    const C1Field a = fourier_matrix(model, level, level, degree, rng);
    const double na = field_norm_1(a);
    if (na <= 1e-12) continue;
    double ratio = 0.0;
    switch (map) {
      case AmplifiedMap::Identity:
        ratio = 1.0;
        break;
      case AmplifiedMap::Involution:
        ratio = field_norm_1(adjoint(a)) / na;
        break;
      case AmplifiedMap::Multiplication: {
        const C1Field b = fourier_matrix(model, level, level, degree, rng);
        const double nb = field_norm_1(b);
        if (nb <= 1e-12) continue;
        ratio = field_norm_1(mul(a, b)) / (na * nb);
        break;
      }
    }
    result.measured = std::max(result.measured, ratio);
  }
  return result;
}

}  // namespace bundlekit
