#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bundlekit {

enum class ModelKind { FlatTorus, EuclideanBox };

/// A sampled point of the grid: flat storage index, multi-index and coordinates.
struct GridPoint {
  std::size_t flat = 0;
  std::vector<int> index;
  std::vector<double> coords;
};

/// Discretized flat model manifold: an N-torus with circumferences `extents`
/// or a Euclidean box with side lengths `extents`, sampled on a regular grid
/// with `grid_sizes[k]` points per axis (coordinates k*h_k, h_k = L_k/n_k).
///
/// Both models carry the identity metric in every chart, so the metric matrix
/// and its inverse have operator norm exactly 1.
class ManifoldModel {
 public:
  ManifoldModel() = default;

  static ManifoldModel build(ModelKind kind, int dim, std::vector<double> extents,
                             std::vector<int> grid_sizes);

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<double>& extents() const { return extents_; }
  const std::vector<int>& grid_sizes() const { return grid_sizes_; }
  const std::vector<double>& spacing() const { return spacing_; }
  double spacing_max() const;

  /// Torus: min_k(L_k)/2.  Box: +infinity (Euclidean exponential map).
  double injectivity_radius() const { return r_inj_; }

  std::size_t num_points() const { return num_points_; }

  std::vector<int> unflatten(std::size_t flat) const;
  std::size_t flatten(const std::vector<int>& index) const;
  std::vector<double> coords(std::size_t flat) const;
  GridPoint point(std::size_t flat) const;
  GridPoint point(const std::vector<int>& index) const;

  /// Grid neighbor along `axis`; wraps on the torus.  Returns false when the
  /// step leaves a box grid.
  bool neighbor(std::size_t flat, int axis, int step, std::size_t& out) const;

  /// Signed coordinate difference a-b along `axis`, lifted to (-L/2, L/2] on
  /// the torus; plain difference on the box.
  double wrap_diff(double a, double b, int axis) const;

  double distance(const std::vector<double>& a, const std::vector<double>& b) const;
  double distance(std::size_t a, std::size_t b) const;

  /// Box: true when the point keeps a 2h margin to every face (the region
  /// where sampled fields are allowed to be nonzero).  Torus: always true.
  bool in_support_region(std::size_t flat) const;

 private:
  ModelKind kind_ = ModelKind::FlatTorus;
  int dim_ = 0;
  std::vector<double> extents_;
  std::vector<int> grid_sizes_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t num_points_ = 0;
  double r_inj_ = 0.0;
};

double geodesic_distance(const ManifoldModel& model, const GridPoint& x, const GridPoint& y);

/// Grid subset of a geodesic ball, with the interior sub-list of points whose
/// full central-difference stencil stays inside the window.
struct ChartWindow {
  std::vector<std::size_t> points;
  std::vector<std::uint8_t> member;    // size num_points
  std::vector<std::uint8_t> interior;  // size num_points
};

/// Normal chart at a grid point: geodesic ball of radius r with the identity
/// metric; chart coordinates are centered (wrapped) differences.
struct Chart {
  std::size_t center = 0;
  double radius = 0.0;
  ChartWindow window;

  std::vector<double> local_coords(const ManifoldModel& model, std::size_t p) const;
};

Chart normal_chart(const ManifoldModel& model, std::size_t center, double r);

}  // namespace bundlekit
