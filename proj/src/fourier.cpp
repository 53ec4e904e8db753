#include "bundlekit/fourier.hpp"

#include <cmath>
#include <stdexcept>

namespace bundlekit {

namespace {

// Enumeration of modes k in [-degree, degree]^N together with the phase table
// exp(i <k, 2 pi x / L>) per grid point.  The table is shared by every entry
// of a matrix field.
struct ModeTable {
  std::vector<std::vector<int>> modes;
  std::vector<std::vector<Complex>> phases;           // [mode][point]
  std::vector<std::vector<double>> freq;              // [mode][axis], angular
};

ModeTable build_mode_table(const ManifoldModel& model, int degree, bool with_phases) {
  const int N = model.dim();
  ModeTable t;
  std::vector<int> k(N, -degree);
  while (true) {
    t.modes.push_back(k);
    int axis = N - 1;
    while (axis >= 0 && ++k[axis] > degree) k[axis--] = -degree;
    if (axis < 0) break;
  }
  t.phases.resize(t.modes.size());
  t.freq.resize(t.modes.size());
  for (std::size_t m = 0; m < t.modes.size(); ++m) {
    t.freq[m].resize(N);
    for (int a = 0; a < N; ++a)
      t.freq[m][a] = 2.0 * M_PI * t.modes[m][a] / model.extents()[a];
    if (!with_phases) continue;
    t.phases[m].resize(model.num_points());
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      const std::vector<double> x = model.coords(p);
      double arg = 0.0;
      for (int a = 0; a < N; ++a) arg += t.freq[m][a] * x[a];
      t.phases[m][p] = Complex(std::cos(arg), std::sin(arg));
    }
  }
  return t;
}

C1Field from_coefficients_generic(const ManifoldModel& model, int rows, int cols,
                                  const std::vector<Matrix>& coeffs, const ModeTable& table) {
  C1Field out = make_zero(model, rows, cols);
  const std::size_t nm = table.modes.size();
  const int sz = rows * cols;
  const int N = model.dim();
  // Flat accumulation loops; the entry index is contiguous in the matrix
  // storage, which keeps this memory bound rather than call bound.
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    Complex* v = out.value.at(p).data();
    for (std::size_t m = 0; m < nm; ++m) {
      const Complex e = table.phases[m][p];
      const Complex* c = coeffs[m].data();
      for (int t = 0; t < sz; ++t) v[t] += e * c[t];
    }
    for (int a = 0; a < N; ++a) {
      Complex* d = out.deriv.component(a, p).data();
      for (std::size_t m = 0; m < nm; ++m) {
        const Complex ef = Complex(0.0, table.freq[m][a]) * table.phases[m][p];
        const Complex* c = coeffs[m].data();
        for (int t = 0; t < sz; ++t) d[t] += ef * c[t];
      }
    }
  }
  return out;
}

// Separable evaluation on a 2-torus: contract the second axis into per-row
// tables first, then sweep the grid with the first-axis phases.  Mode order
// in ModeTable has the last axis fastest, matching the index arithmetic here.
C1Field from_coefficients_2d(const ManifoldModel& model, int rows, int cols,
                             const std::vector<Matrix>& coeffs, const ModeTable& table,
                             int degree) {
  C1Field out = make_zero(model, rows, cols);
  const int sz = rows * cols;
  const int nmodes = 2 * degree + 1;
  const int n0 = model.grid_sizes()[0], n1 = model.grid_sizes()[1];
  const double w0 = 2.0 * M_PI / model.extents()[0];
  const double w1 = 2.0 * M_PI / model.extents()[1];

  std::vector<std::vector<Complex>> ax0(nmodes, std::vector<Complex>(n0));
  std::vector<std::vector<Complex>> ax1(nmodes, std::vector<Complex>(n1));
  for (int k = -degree; k <= degree; ++k) {
    for (int i = 0; i < n0; ++i)
      ax0[k + degree][i] = std::exp(Complex(0.0, k * w0 * i * model.spacing()[0]));
    for (int i = 0; i < n1; ++i)
      ax1[k + degree][i] = std::exp(Complex(0.0, k * w1 * i * model.spacing()[1]));
  }

  // Stage 1: g[k0][i1] = sum_{k1} e^{i k1 w1 x1} c[(k0,k1)], plus the
  // second-axis derivative variant.
  std::vector<std::vector<Matrix>> g(nmodes), g1(nmodes);
  for (int a = 0; a < nmodes; ++a) {
    g[a].assign(n1, Matrix::Zero(rows, cols));
    g1[a].assign(n1, Matrix::Zero(rows, cols));
  }
  for (int k0 = 0; k0 < nmodes; ++k0)
    for (int k1 = 0; k1 < nmodes; ++k1) {
      const Matrix& c = coeffs[static_cast<std::size_t>(k0) * nmodes + k1];
      const double f1 = (k1 - degree) * w1;
      for (int i1 = 0; i1 < n1; ++i1) {
        const Complex e = ax1[k1][i1];
        g[k0][i1] += e * c;
        g1[k0][i1] += Complex(0.0, f1) * e * c;
      }
    }

  // Stage 2: sweep the grid once per first-axis mode.
  for (int i0 = 0; i0 < n0; ++i0)
    for (int i1 = 0; i1 < n1; ++i1) {
      const std::size_t p = static_cast<std::size_t>(i0) * n1 + i1;
      Complex* v = out.value.at(p).data();
      Complex* d0 = out.deriv.component(0, p).data();
      Complex* d1 = out.deriv.component(1, p).data();
      for (int k0 = 0; k0 < nmodes; ++k0) {
        const Complex e = ax0[k0][i0];
        const Complex e0 = Complex(0.0, (k0 - degree) * w0) * e;
        const Complex* gv = g[k0][i1].data();
        const Complex* gd = g1[k0][i1].data();
        for (int t = 0; t < sz; ++t) {
          v[t] += e * gv[t];
          d0[t] += e0 * gv[t];
          d1[t] += e * gd[t];
        }
      }
    }
  return out;
}

C1Field from_coefficients(const ManifoldModel& model, int rows, int cols,
                          const std::vector<Matrix>& coeffs, const ModeTable& table,
                          int degree) {
  if (model.dim() == 2) return from_coefficients_2d(model, rows, cols, coeffs, table, degree);
  return from_coefficients_generic(model, rows, cols, coeffs, table);
}

}  // namespace

C1Field fourier_matrix(const ManifoldModel& model, int rows, int cols, int degree, Rng& rng,
                       double amplitude) {
  if (degree < 0) throw std::invalid_argument("fourier degree must be >= 0");
  const ModeTable table = build_mode_table(model, degree, model.dim() != 2);
  const double sigma = amplitude / std::sqrt(double(table.modes.size()));
  std::vector<Matrix> coeffs(table.modes.size());
  for (auto& c : coeffs) {
    c = Matrix(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) c(i, j) = sigma * rng.complex_normal();
  }
  C1Field out = from_coefficients(model, rows, cols, coeffs, table, degree);
  if (model.kind() == ModelKind::EuclideanBox) out = apply_margin(out);
  return out;
}

C1Field fourier_scalar(const ManifoldModel& model, int degree, Rng& rng, double amplitude) {
  return fourier_matrix(model, 1, 1, degree, rng, amplitude);
}

C1Field real_fourier_scalar(const ManifoldModel& model, int degree, Rng& rng, double amplitude) {
  const ModeTable table = build_mode_table(model, degree, model.dim() != 2);
  const double sigma = amplitude / std::sqrt(double(table.modes.size()));
  // Conjugate-symmetric coefficients c_{-k} = conj(c_k) give a real sum.
  std::vector<Matrix> coeffs(table.modes.size(), Matrix::Zero(1, 1));
  for (std::size_t m = 0; m < table.modes.size(); ++m) {
    const std::vector<int>& k = table.modes[m];
    bool lead_nonneg = true;
    bool zero = true;
    for (int ka : k) {
      if (ka != 0) {
        lead_nonneg = ka > 0;
        zero = false;
        break;
      }
    }
    if (zero) {
      coeffs[m](0, 0) = sigma * rng.normal();
    } else if (lead_nonneg) {
      const Complex c = sigma * rng.complex_normal();
      coeffs[m](0, 0) = c;
      std::vector<int> neg(k.size());
      for (std::size_t a = 0; a < k.size(); ++a) neg[a] = -k[a];
      for (std::size_t mm = 0; mm < table.modes.size(); ++mm)
        if (table.modes[mm] == neg) coeffs[mm](0, 0) = std::conj(c);
    }
  }
  return from_coefficients(model, 1, 1, coeffs, table, degree);
}

Matrix random_unitary(int n, Rng& rng) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    Complex d = r(j, j);
    q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : Complex(1.0, 0.0);
  }
  return q;
}

Matrix random_hermitian(int n, Rng& rng) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
  Matrix h = 0.5 * (g + g.adjoint());
  const double norm = h.cwiseAbs().maxCoeff();
  if (norm > 0) h /= norm;
  return h;
}

Matrix random_spd(int n, double condition, Rng& rng) {
  if (condition < 1.0) throw std::invalid_argument("condition must be >= 1");
  Matrix u = random_unitary(n, rng);
  Eigen::VectorXd ev(n);
  ev(0) = 1.0;
  if (n > 1) ev(n - 1) = 1.0 / condition;
  for (int i = 1; i + 1 < n; ++i)
    ev(i) = std::pow(10.0, -rng.uniform() * std::log10(condition));
  Matrix d = ev.cast<Complex>().asDiagonal();
  return u * d * u.adjoint();
}

C1Field gauge_exponential(const C1Field& phase, const Matrix& generator) {
  if (phase.rows() != 1 || phase.cols() != 1)
    throw std::invalid_argument("phase must be a scalar field");
  if ((generator - generator.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("gauge generator must be hermitian");
  const ManifoldModel& m = phase.model();
  const int n = static_cast<int>(generator.rows());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(generator);
  const Matrix v = eig.eigenvectors();
  const Eigen::VectorXd lam = eig.eigenvalues();

  C1Field out = make_zero(m, n, n);
  out.path = phase.path;
  out.vmask = phase.vmask;
  out.dmask = phase.dmask;
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    if (!out.vok(p)) continue;
    const double g = phase.value.at(p)(0, 0).real();
    Vector e(n);
    for (int i = 0; i < n; ++i) e(i) = std::exp(Complex(0.0, g * lam(i)));
    const Matrix u = v * e.asDiagonal() * v.adjoint();
    out.value.at(p) = u;
    if (!out.dok(p)) continue;
    const Matrix au = generator * u;
    for (int k = 0; k < m.dim(); ++k) {
      const double dg = phase.deriv.component(k, p)(0, 0).real();
      out.deriv.component(k, p) = Complex(0.0, dg) * au;
    }
  }
  return out;
}

C1Field conjugated_projector(const C1Field& gauge, int rank) {
  const int n = gauge.rows();
  if (rank < 1 || rank > n) throw std::invalid_argument("projector rank out of range");
  Matrix p0 = Matrix::Zero(n, n);
  for (int i = 0; i < rank; ++i) p0(i, i) = 1.0;
  return mul(mul(gauge, make_constant(gauge.model(), p0)), adjoint(gauge));
}

C1Field winding_projector(const ManifoldModel& model, int winding) {
  if (model.dim() != 1) throw std::invalid_argument("winding projector is a 1-d construction");
  const double omega = 2.0 * M_PI * winding / model.extents()[0];
  C1Field out = make_zero(model, 2, 2);
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    const double phi = omega * model.coords(p)[0];
    const double c = std::cos(phi), s = std::sin(phi);
    Matrix v(2, 2);
    v << c * c, c * s, c * s, s * s;
    out.value.at(p) = v;
    Matrix d(2, 2);
    d << -std::sin(2 * phi), std::cos(2 * phi), std::cos(2 * phi), std::sin(2 * phi);
    out.deriv.component(0, p) = omega * d;
  }
  return out;
}

namespace {

// C^infty ramp: 0 for t <= 0, 1 for t >= 1.
void smooth_ramp(double t, double& value, double& slope) {
  auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  auto dpsi = [&](double x) { return x > 1e-8 ? psi(x) / (x * x) : 0.0; };
  const double a = psi(t), b = psi(1.0 - t);
  const double denom = a + b;
  if (denom <= 0.0) {
    value = t >= 1.0 ? 1.0 : 0.0;
    slope = 0.0;
    return;
  }
  value = a / denom;
  slope = (dpsi(t) * b + a * dpsi(1.0 - t)) / (denom * denom);
}

}  // namespace

C1Field margin_plateau(const ManifoldModel& model) {
  C1Field out = make_constant(model, Matrix::Constant(1, 1, 1.0));
  if (model.kind() == ModelKind::FlatTorus) return out;
  const int N = model.dim();
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    const std::vector<double> x = model.coords(p);
    double value = 1.0;
    std::vector<double> factor(N, 1.0), dfactor(N, 0.0);
    for (int k = 0; k < N; ++k) {
      const double h = model.spacing()[k];
      // Zero on the 2h margin, with a ramp wide enough for the grid to
      // resolve its derivatives.
      const double lo = 2.0 * h;
      const double width = std::max(4.0 * h, model.extents()[k] / 8.0);
      double vl, sl, vr, sr;
      smooth_ramp((x[k] - lo) / width, vl, sl);
      smooth_ramp((model.extents()[k] - lo - x[k]) / width, vr, sr);
      factor[k] = vl * vr;
      dfactor[k] = (sl * vr - vl * sr) / width;
      value *= factor[k];
    }
    out.value.at(p)(0, 0) = value;
    for (int k = 0; k < N; ++k) {
      double d = dfactor[k];
      for (int j = 0; j < N; ++j)
        if (j != k) d *= factor[j];
      out.deriv.component(k, p)(0, 0) = d;
    }
  }
  return out;
}

C1Field apply_margin(const C1Field& f) {
  if (f.model().kind() == ModelKind::FlatTorus) return f;
  return mul(margin_plateau(f.model()), f);
}

}  // namespace bundlekit
