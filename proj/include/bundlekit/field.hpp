#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bundlekit/grid.hpp"

namespace bundlekit {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Grid-indexed family of rows x cols complex matrices.  1x1 plays the role
/// of a scalar field, d x 1 of a vector field / section.
class Field {
 public:
  Field() = default;
  Field(const ManifoldModel& model, int rows, int cols);

  static Field constant(const ManifoldModel& model, const Matrix& m);

  const ManifoldModel& model() const { return *model_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  const Matrix& at(std::size_t p) const { return values_[p]; }
  Matrix& at(std::size_t p) { return values_[p]; }

 private:
  const ManifoldModel* model_ = nullptr;
  int rows_ = 0, cols_ = 0;
  std::vector<Matrix> values_;
};

/// Per-axis components of a derivative field.  The stacked representative at
/// a point is the (N*rows) x cols matrix with the axis-k component in block
/// row k; its operator norm is the cotangent fiber norm (for columns this is
/// the plain Euclidean norm over all components).
class CotangentField {
 public:
  CotangentField() = default;
  CotangentField(const ManifoldModel& model, int rows, int cols);

  const ManifoldModel& model() const { return *model_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  const Matrix& component(int axis, std::size_t p) const;
  Matrix& component(int axis, std::size_t p);

  Matrix stacked(std::size_t p) const;
  double fiber_norm(std::size_t p) const;

 private:
  const ManifoldModel* model_ = nullptr;
  int rows_ = 0, cols_ = 0;
  std::vector<Matrix> comps_;  // axis-major: comps_[axis * num_points + p]
};

/// Central second-order finite differences per axis; periodic wrap on the
/// torus, one-sided at box edges (exact zero under the 2h margin convention).
CotangentField derham(const Field& f);

/// Finite differences restricted to a chart window; the returned mask marks
/// the window-interior points where the central stencil was available.
std::pair<CotangentField, std::vector<std::uint8_t>> derham_window(const Field& f,
                                                                   const ChartWindow& w);

double cotangent_norm(const CotangentField& df, std::size_t p);

enum class DerivPath { Analytic, FiniteDifference };

/// A field together with its derivative, the common currency of every norm
/// and block construction here.  Products combine derivatives by the Leibniz
/// rule, so identities that hold exactly for true derivatives stay exact.
///
/// Empty masks mean "valid everywhere".  vmask marks points with usable
/// values, dmask points with usable derivatives (finite-difference fields on
/// chart windows are only derivative-valid on the window interior).
struct C1Field {
  Field value;
  CotangentField deriv;
  DerivPath path = DerivPath::Analytic;
  std::vector<std::uint8_t> vmask;
  std::vector<std::uint8_t> dmask;

  const ManifoldModel& model() const { return value.model(); }
  int rows() const { return value.rows(); }
  int cols() const { return value.cols(); }
  bool vok(std::size_t p) const { return vmask.empty() || vmask[p]; }
  bool dok(std::size_t p) const { return vok(p) && (dmask.empty() || dmask[p]); }
};

C1Field make_zero(const ManifoldModel& model, int rows, int cols);
C1Field make_constant(const ManifoldModel& model, const Matrix& m);
C1Field with_fd_derivative(Field values);

C1Field mul(const C1Field& a, const C1Field& b);  // 1x1 factors broadcast
C1Field add(const C1Field& a, const C1Field& b);
C1Field sub(const C1Field& a, const C1Field& b);
C1Field scale(Complex c, const C1Field& a);
C1Field adjoint(const C1Field& a);

/// Vertical concatenation of equal-width fields into one block column.
C1Field vstack(const std::vector<const C1Field*>& parts);

std::vector<std::uint8_t> mask_and(const std::vector<std::uint8_t>& a,
                                   const std::vector<std::uint8_t>& b);

}  // namespace bundlekit
