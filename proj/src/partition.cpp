#include "bundlekit/partition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bundlekit {

namespace {

// Bump profile as a function of u = (d / 2 eps)^2: exp(-1/(1-u)) on [0,1),
// zero beyond.  Returns the value and the derivative with respect to u.
void bump_profile(double u, double& value, double& dvalue) {
  if (u >= 1.0) {
    value = 0.0;
    dvalue = 0.0;
    return;
  }
  const double t = 1.0 / (1.0 - u);
  if (t > 700.0) {  // underflows to zero anyway
    value = 0.0;
    dvalue = 0.0;
    return;
  }
  value = std::exp(-t);
  dvalue = -value * t * t;
}

}  // namespace

std::vector<std::size_t> ball_cover(const ManifoldModel& model, double eps) {
  if (!(eps > 0.0) || eps >= model.injectivity_radius())
    throw std::invalid_argument("cover radius must satisfy 0 < eps < r_inj");

  const int N = model.dim();
  std::vector<int> counts(N);
  for (int k = 0; k < N; ++k)
    counts[k] = std::max(1, static_cast<int>(std::ceil(model.extents()[k] / eps)));

  std::vector<std::size_t> centers;
  std::vector<int> idx(N, 0);
  while (true) {
    std::vector<int> grid_idx(N);
    for (int k = 0; k < N; ++k)
      grid_idx[k] = static_cast<int>((static_cast<long long>(idx[k]) * model.grid_sizes()[k]) /
                                     counts[k]);
    centers.push_back(model.flatten(grid_idx));
    int axis = N - 1;
    while (axis >= 0 && ++idx[axis] >= counts[axis]) idx[axis--] = 0;
    if (axis < 0) break;
  }

  for (std::size_t p = 0; p < model.num_points(); ++p) {
    if (!model.in_support_region(p)) continue;
    bool covered = false;
    for (std::size_t c : centers)
      if (model.distance(p, c) < eps) {
        covered = true;
        break;
      }
    if (!covered) throw std::runtime_error("cover construction failed to reach a grid point");
  }
  return centers;
}

PartitionOfUnity build_partition(const ManifoldModel& model, std::vector<std::size_t> centers,
                                 double eps) {
  if (centers.empty()) throw std::invalid_argument("partition needs at least one center");
  const std::size_t np = model.num_points();
  const int N = model.dim();
  const std::size_t m = centers.size();

  // Raw bumps beta_i and their derivatives.
  std::vector<C1Field> beta(m);
  for (std::size_t i = 0; i < m; ++i) {
    beta[i] = make_zero(model, 1, 1);
    const std::vector<double> y = model.coords(centers[i]);
    for (std::size_t p = 0; p < np; ++p) {
      const std::vector<double> x = model.coords(p);
      double u = 0.0;
      std::vector<double> w(N);
      for (int k = 0; k < N; ++k) {
        w[k] = model.wrap_diff(x[k], y[k], k);
        u += w[k] * w[k];
      }
      u /= 4.0 * eps * eps;
      double value, dvalue;
      bump_profile(u, value, dvalue);
      beta[i].value.at(p)(0, 0) = value;
      for (int k = 0; k < N; ++k)
        beta[i].deriv.component(k, p)(0, 0) = dvalue * w[k] / (2.0 * eps * eps);
    }
  }

  // Normalizer S = sqrt(sum beta_j^2).
  std::vector<double> s(np, 0.0);
  std::vector<std::vector<double>> ds(np, std::vector<double>(N, 0.0));
  for (std::size_t p = 0; p < np; ++p) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double b = beta[i].value.at(p)(0, 0).real();
      sq += b * b;
    }
    if (sq <= 0.0 && model.in_support_region(p))
      throw std::runtime_error("partition bumps vanish simultaneously inside the support region");
    s[p] = std::sqrt(sq);
    if (s[p] > 0.0)
      for (int k = 0; k < N; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i)
          acc += beta[i].value.at(p)(0, 0).real() * beta[i].deriv.component(k, p)(0, 0).real();
        ds[p][k] = acc / s[p];
      }
  }

  PartitionOfUnity pou;
  pou.model = &model;
  pou.epsilon = eps;
  pou.centers = std::move(centers);
  pou.sqrt_bumps.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    pou.sqrt_bumps[i] = make_zero(model, 1, 1);
    for (std::size_t p = 0; p < np; ++p) {
      if (s[p] <= 0.0) continue;
      const double b = beta[i].value.at(p)(0, 0).real();
      pou.sqrt_bumps[i].value.at(p)(0, 0) = b / s[p];
      for (int k = 0; k < N; ++k) {
        const double db = beta[i].deriv.component(k, p)(0, 0).real();
        pou.sqrt_bumps[i].deriv.component(k, p)(0, 0) = (db * s[p] - b * ds[p][k]) / (s[p] * s[p]);
      }
    }
  }

  int multiplicity = 0;
  for (std::size_t p = 0; p < np; ++p) {
    int count = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (beta[i].value.at(p)(0, 0).real() > 0.0) ++count;
    multiplicity = std::max(multiplicity, count);
  }
  pou.multiplicity = multiplicity;

  double fd = 0.0, an = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const CotangentField dfd = derham(pou.sqrt_bumps[i].value);
    for (std::size_t p = 0; p < np; ++p) {
      fd = std::max(fd, dfd.fiber_norm(p));
      an = std::max(an, pou.sqrt_bumps[i].deriv.fiber_norm(p));
    }
  }
  pou.deriv_bound_fd = fd;
  pou.deriv_bound_analytic = an;
  return pou;
}

CheckReport verify_partition(const PartitionOfUnity& pou) {
  const ManifoldModel& model = *pou.model;
  const std::size_t np = model.num_points();
  const std::size_t m = pou.size();

  double sum_err = 0.0, range_err = 0.0, support_err = 0.0;
  int multiplicity = 0;
  for (std::size_t p = 0; p < np; ++p) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double chi = pou.chi(i, p);
      sum += chi;
      if (chi > 0.0) ++count;
      range_err = std::max(range_err, std::max(-chi, chi - 1.0));
      const double d = model.distance(p, pou.centers[i]);
      if (d >= 2.0 * pou.epsilon) support_err = std::max(support_err, chi);
    }
    // The sum is only required on the region where fields may live.
    if (model.in_support_region(p)) sum_err = std::max(sum_err, std::abs(sum - 1.0));
    multiplicity = std::max(multiplicity, count);
  }

  CheckReport report;
  report.append(make_check("partition_sum", "sum_i chi_i(x) = 1 pointwise", sum_err, 0.0, 1e-12));
  report.append(make_check("partition_range", "0 <= chi_i(x) <= 1", range_err, 0.0, 1e-12));
  report.append(make_check("partition_support", "supp(sqrt(chi_i)) inside B_{2 eps}(y_i)",
                           support_err, 0.0, 0.0));
  report.append(make_check("partition_multiplicity", "cover of supports has finite multiplicity",
                           double(multiplicity), double(pou.multiplicity), 0.0));
  report.append(make_check("partition_deriv_bound", "sup_i ||d sqrt(chi_i)||_inf finite",
                           pou.deriv_bound_fd, pou.deriv_bound_fd, 0.0));
  return report;
}

double partition_floor(const PartitionOfUnity& pou) {
  const ManifoldModel& model = *pou.model;
  double floor = 1.0;
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    if (model.kind() == ModelKind::EuclideanBox && !model.in_support_region(p)) continue;
    double best = 0.0;
    for (std::size_t i = 0; i < pou.size(); ++i) best = std::max(best, pou.chi(i, p));
    floor = std::min(floor, best);
  }
  return floor;
}

double chi_derivative_bound(const PartitionOfUnity& pou) {
  const ManifoldModel& model = *pou.model;
  double sup = 0.0;
  for (std::size_t i = 0; i < pou.size(); ++i) {
    const C1Field chi = mul(pou.sqrt_bumps[i], pou.sqrt_bumps[i]);
    for (std::size_t p = 0; p < model.num_points(); ++p)
      sup = std::max(sup, chi.deriv.fiber_norm(p));
  }
  return sup;
}

}  // namespace bundlekit
