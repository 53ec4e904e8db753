#include "bundlekit/field.hpp"

#include <stdexcept>

#include "bundlekit/linalg.hpp"

namespace bundlekit {

Field::Field(const ManifoldModel& model, int rows, int cols)
    : model_(&model), rows_(rows), cols_(cols),
      values_(model.num_points(), Matrix::Zero(rows, cols)) {}

Field Field::constant(const ManifoldModel& model, const Matrix& m) {
  Field f(model, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (std::size_t p = 0; p < f.size(); ++p) f.at(p) = m;
  return f;
}

CotangentField::CotangentField(const ManifoldModel& model, int rows, int cols)
    : model_(&model), rows_(rows), cols_(cols),
      comps_(static_cast<std::size_t>(model.dim()) * model.num_points(),
             Matrix::Zero(rows, cols)) {}

const Matrix& CotangentField::component(int axis, std::size_t p) const {
  return comps_[static_cast<std::size_t>(axis) * model_->num_points() + p];
}

Matrix& CotangentField::component(int axis, std::size_t p) {
  return comps_[static_cast<std::size_t>(axis) * model_->num_points() + p];
}

Matrix CotangentField::stacked(std::size_t p) const {
  const int N = model_->dim();
  Matrix out(static_cast<Eigen::Index>(N) * rows_, cols_);
  for (int k = 0; k < N; ++k) out.middleRows(static_cast<Eigen::Index>(k) * rows_, rows_) = component(k, p);
  return out;
}

double CotangentField::fiber_norm(std::size_t p) const {
  return op_norm(stacked(p));
}

double cotangent_norm(const CotangentField& df, std::size_t p) {
  return df.fiber_norm(p);
}

CotangentField derham(const Field& f) {
  const ManifoldModel& m = f.model();
  CotangentField df(m, f.rows(), f.cols());
  for (int k = 0; k < m.dim(); ++k) {
    const double h = m.spacing()[k];
    for (std::size_t p = 0; p < m.num_points(); ++p) {
      std::size_t fwd, bwd;
      bool has_fwd = m.neighbor(p, k, +1, fwd);
      bool has_bwd = m.neighbor(p, k, -1, bwd);
      if (has_fwd && has_bwd) {
        df.component(k, p) = (f.at(fwd) - f.at(bwd)) / (2.0 * h);
      } else if (has_fwd) {
        df.component(k, p) = (f.at(fwd) - f.at(p)) / h;
      } else if (has_bwd) {
        df.component(k, p) = (f.at(p) - f.at(bwd)) / h;
      }
    }
  }
  return df;
}

std::pair<CotangentField, std::vector<std::uint8_t>> derham_window(const Field& f,
                                                                   const ChartWindow& w) {
  const ManifoldModel& m = f.model();
  CotangentField df(m, f.rows(), f.cols());
  std::vector<std::uint8_t> dmask(m.num_points(), 0);
  for (std::size_t p : w.points) {
    bool valid = true;
    for (int k = 0; k < m.dim() && valid; ++k) {
      std::size_t fwd, bwd;
      const bool has_fwd = m.neighbor(p, k, +1, fwd) && w.member[fwd];
      const bool has_bwd = m.neighbor(p, k, -1, bwd) && w.member[bwd];
      std::size_t edge;
      const bool grid_fwd = m.neighbor(p, k, +1, edge);
      const bool grid_bwd = m.neighbor(p, k, -1, edge);
      if (has_fwd && has_bwd) {
        df.component(k, p) = (f.at(fwd) - f.at(bwd)) / (2.0 * m.spacing()[k]);
      } else if (has_fwd && !grid_bwd) {
        // Box edge: the one-sided difference is all the grid offers.
        df.component(k, p) = (f.at(fwd) - f.at(p)) / m.spacing()[k];
      } else if (has_bwd && !grid_fwd) {
        df.component(k, p) = (f.at(p) - f.at(bwd)) / m.spacing()[k];
      } else {
        valid = false;  // truncated by the window itself; no honest stencil
      }
    }
    if (valid) dmask[p] = 1;
  }
  return {std::move(df), std::move(dmask)};
}

C1Field make_zero(const ManifoldModel& model, int rows, int cols) {
  C1Field out;
  out.value = Field(model, rows, cols);
  out.deriv = CotangentField(model, rows, cols);
  return out;
}

C1Field make_constant(const ManifoldModel& model, const Matrix& m) {
  C1Field out;
  out.value = Field::constant(model, m);
  out.deriv = CotangentField(model, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  return out;
}

C1Field with_fd_derivative(Field values) {
  C1Field out;
  out.deriv = derham(values);
  out.value = std::move(values);
  out.path = DerivPath::FiniteDifference;
  return out;
}

std::vector<std::uint8_t> mask_and(const std::vector<std::uint8_t>& a,
                                   const std::vector<std::uint8_t>& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

namespace {

DerivPath join(DerivPath a, DerivPath b) {
  return (a == DerivPath::Analytic && b == DerivPath::Analytic) ? DerivPath::Analytic
                                                                : DerivPath::FiniteDifference;
}

void check_same_model(const C1Field& a, const C1Field& b) {
  if (&a.model() != &b.model()) throw std::invalid_argument("fields live on different models");
}

}  // namespace

C1Field mul(const C1Field& a, const C1Field& b) {
  check_same_model(a, b);
  const bool a_scalar = a.rows() == 1 && a.cols() == 1;
  const bool b_scalar = b.rows() == 1 && b.cols() == 1;
  if (!a_scalar && !b_scalar && a.cols() != b.rows())
    throw std::invalid_argument("field shape mismatch in product");

  const ManifoldModel& m = a.model();
  const int rows = a_scalar ? b.rows() : a.rows();
  const int cols = b_scalar ? a.cols() : b.cols();
  C1Field out = make_zero(m, rows, cols);
  out.path = join(a.path, b.path);
  out.vmask = mask_and(a.vmask, b.vmask);
  out.dmask = mask_and(mask_and(a.dmask, b.dmask), out.vmask);

  for (std::size_t p = 0; p < m.num_points(); ++p) {
    if (!out.vok(p)) continue;
    if (a_scalar || b_scalar) {
      Complex s = a_scalar ? a.value.at(p)(0, 0) : b.value.at(p)(0, 0);
      const C1Field& big = a_scalar ? b : a;
      out.value.at(p) = s * big.value.at(p);
      if (!out.dok(p)) continue;
      const C1Field& sc = a_scalar ? a : b;
      for (int k = 0; k < m.dim(); ++k)
        out.deriv.component(k, p) =
            sc.deriv.component(k, p)(0, 0) * big.value.at(p) + s * big.deriv.component(k, p);
    } else {
      out.value.at(p) = a.value.at(p) * b.value.at(p);
      if (!out.dok(p)) continue;
      for (int k = 0; k < m.dim(); ++k)
        out.deriv.component(k, p) = a.deriv.component(k, p) * b.value.at(p) +
                                    a.value.at(p) * b.deriv.component(k, p);
    }
  }
  return out;
}

C1Field add(const C1Field& a, const C1Field& b) {
  check_same_model(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("field shape mismatch in sum");
  const ManifoldModel& m = a.model();
  C1Field out = make_zero(m, a.rows(), a.cols());
  out.path = join(a.path, b.path);
  out.vmask = mask_and(a.vmask, b.vmask);
  out.dmask = mask_and(a.dmask, b.dmask);
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    if (!out.vok(p)) continue;
    out.value.at(p) = a.value.at(p) + b.value.at(p);
    if (!out.dok(p)) continue;
    for (int k = 0; k < m.dim(); ++k)
      out.deriv.component(k, p) = a.deriv.component(k, p) + b.deriv.component(k, p);
  }
  return out;
}

C1Field sub(const C1Field& a, const C1Field& b) {
  return add(a, scale(-1.0, b));
}

C1Field scale(Complex c, const C1Field& a) {
  const ManifoldModel& m = a.model();
  C1Field out = make_zero(m, a.rows(), a.cols());
  out.path = a.path;
  out.vmask = a.vmask;
  out.dmask = a.dmask;
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    if (!out.vok(p)) continue;
    out.value.at(p) = c * a.value.at(p);
    if (!out.dok(p)) continue;
    for (int k = 0; k < m.dim(); ++k) out.deriv.component(k, p) = c * a.deriv.component(k, p);
  }
  return out;
}

C1Field adjoint(const C1Field& a) {
  const ManifoldModel& m = a.model();
  C1Field out = make_zero(m, a.cols(), a.rows());
  out.path = a.path;
  out.vmask = a.vmask;
  out.dmask = a.dmask;
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    if (!out.vok(p)) continue;
    out.value.at(p) = a.value.at(p).adjoint();
    if (!out.dok(p)) continue;
    for (int k = 0; k < m.dim(); ++k)
      out.deriv.component(k, p) = a.deriv.component(k, p).adjoint();
  }
  return out;
}

C1Field vstack(const std::vector<const C1Field*>& parts) {
  if (parts.empty()) throw std::invalid_argument("vstack needs at least one field");
  const ManifoldModel& m = parts.front()->model();
  const int cols = parts.front()->cols();
  int rows = 0;
  DerivPath path = DerivPath::Analytic;
  std::vector<std::uint8_t> vmask, dmask;
  for (const C1Field* f : parts) {
    if (f->cols() != cols) throw std::invalid_argument("vstack width mismatch");
    rows += f->rows();
    path = join(path, f->path);
    vmask = mask_and(vmask, f->vmask);
    dmask = mask_and(dmask, f->dmask);
  }
  C1Field out = make_zero(m, rows, cols);
  out.path = path;
  out.vmask = std::move(vmask);
  out.dmask = std::move(dmask);
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    if (!out.vok(p)) continue;
    int r0 = 0;
    for (const C1Field* f : parts) {
      out.value.at(p).middleRows(r0, f->rows()) = f->value.at(p);
      for (int k = 0; k < m.dim(); ++k)
        out.deriv.component(k, p).middleRows(r0, f->rows()) = f->deriv.component(k, p);
      r0 += f->rows();
    }
  }
  return out;
}

}  // namespace bundlekit
