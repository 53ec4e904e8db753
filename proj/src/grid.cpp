#include "bundlekit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bundlekit {

ManifoldModel ManifoldModel::build(ModelKind kind, int dim, std::vector<double> extents,
                                   std::vector<int> grid_sizes) {
  if (dim < 1) throw std::invalid_argument("manifold dimension must be >= 1");
  if (static_cast<int>(extents.size()) != dim || static_cast<int>(grid_sizes.size()) != dim)
    throw std::invalid_argument("extents/grid_sizes must have one entry per axis");
  for (double L : extents)
    if (!(L > 0.0)) throw std::invalid_argument("extents must be positive");
  for (int n : grid_sizes)
    if (n < 4) throw std::invalid_argument("grid_sizes must be >= 4");

  ManifoldModel m;
  m.kind_ = kind;
  m.dim_ = dim;
  m.extents_ = std::move(extents);
  m.grid_sizes_ = std::move(grid_sizes);
  m.spacing_.resize(dim);
  for (int k = 0; k < dim; ++k) m.spacing_[k] = m.extents_[k] / m.grid_sizes_[k];

  m.strides_.assign(dim, 1);
  for (int k = dim - 2; k >= 0; --k)
    m.strides_[k] = m.strides_[k + 1] * static_cast<std::size_t>(m.grid_sizes_[k + 1]);
  m.num_points_ = m.strides_[0] * static_cast<std::size_t>(m.grid_sizes_[0]);

  if (kind == ModelKind::FlatTorus) {
    double lmin = *std::min_element(m.extents_.begin(), m.extents_.end());
    m.r_inj_ = lmin / 2.0;
  } else {
    m.r_inj_ = std::numeric_limits<double>::infinity();
  }
  return m;
}

double ManifoldModel::spacing_max() const {
  return *std::max_element(spacing_.begin(), spacing_.end());
}

std::vector<int> ManifoldModel::unflatten(std::size_t flat) const {
  std::vector<int> idx(dim_);
  for (int k = 0; k < dim_; ++k) {
    idx[k] = static_cast<int>(flat / strides_[k]);
    flat %= strides_[k];
  }
  return idx;
}

std::size_t ManifoldModel::flatten(const std::vector<int>& index) const {
  std::size_t flat = 0;
  for (int k = 0; k < dim_; ++k) {
    int i = index[k];
    if (i < 0 || i >= grid_sizes_[k]) throw std::out_of_range("grid index out of bounds");
    flat += strides_[k] * static_cast<std::size_t>(i);
  }
  return flat;
}

std::vector<double> ManifoldModel::coords(std::size_t flat) const {
  std::vector<int> idx = unflatten(flat);
  std::vector<double> c(dim_);
  for (int k = 0; k < dim_; ++k) c[k] = idx[k] * spacing_[k];
  return c;
}

GridPoint ManifoldModel::point(std::size_t flat) const {
  GridPoint p;
  p.flat = flat;
  p.index = unflatten(flat);
  p.coords.resize(dim_);
  for (int k = 0; k < dim_; ++k) p.coords[k] = p.index[k] * spacing_[k];
  return p;
}

GridPoint ManifoldModel::point(const std::vector<int>& index) const {
  return point(flatten(index));
}

bool ManifoldModel::neighbor(std::size_t flat, int axis, int step, std::size_t& out) const {
  std::vector<int> idx = unflatten(flat);
  int i = idx[axis] + step;
  int n = grid_sizes_[axis];
  if (kind_ == ModelKind::FlatTorus) {
    i = ((i % n) + n) % n;
  } else if (i < 0 || i >= n) {
    return false;
  }
  idx[axis] = i;
  out = flatten(idx);
  return true;
}

double ManifoldModel::wrap_diff(double a, double b, int axis) const {
  double d = a - b;
  if (kind_ == ModelKind::FlatTorus) {
    double L = extents_[axis];
    d -= L * std::round(d / L);
  }
  return d;
}

double ManifoldModel::distance(const std::vector<double>& a, const std::vector<double>& b) const {
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) {
    double d = wrap_diff(a[k], b[k], k);
    s += d * d;
  }
  return std::sqrt(s);
}

double ManifoldModel::distance(std::size_t a, std::size_t b) const {
  return distance(coords(a), coords(b));
}

bool ManifoldModel::in_support_region(std::size_t flat) const {
  if (kind_ == ModelKind::FlatTorus) return true;
  std::vector<double> c = coords(flat);
  for (int k = 0; k < dim_; ++k) {
    double margin = 2.0 * spacing_[k];
    if (c[k] < margin - 1e-12 || c[k] > extents_[k] - margin + 1e-12) return false;
  }
  return true;
}

double geodesic_distance(const ManifoldModel& model, const GridPoint& x, const GridPoint& y) {
  return model.distance(x.coords, y.coords);
}

std::vector<double> Chart::local_coords(const ManifoldModel& model, std::size_t p) const {
  std::vector<double> c = model.coords(p);
  std::vector<double> o = model.coords(center);
  std::vector<double> out(model.dim());
  for (int k = 0; k < model.dim(); ++k) out[k] = model.wrap_diff(c[k], o[k], k);
  return out;
}

Chart normal_chart(const ManifoldModel& model, std::size_t center, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("chart radius must be positive");
  if (r >= model.injectivity_radius())
    throw std::invalid_argument("chart radius must be below the injectivity radius");

  Chart chart;
  chart.center = center;
  chart.radius = r;
  chart.window.member.assign(model.num_points(), 0);
  chart.window.interior.assign(model.num_points(), 0);

  for (std::size_t p = 0; p < model.num_points(); ++p) {
    if (model.distance(p, center) < r) {
      chart.window.member[p] = 1;
      chart.window.points.push_back(p);
    }
  }
  for (std::size_t p : chart.window.points) {
    bool ok = true;
    for (int k = 0; k < model.dim() && ok; ++k) {
      for (int step : {-1, 1}) {
        std::size_t q;
        if (!model.neighbor(p, k, step, q) || !chart.window.member[q]) {
          ok = false;
          break;
        }
      }
    }
    if (ok) chart.window.interior[p] = 1;
  }
  return chart;
}

}  // namespace bundlekit
