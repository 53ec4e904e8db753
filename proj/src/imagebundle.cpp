#include "bundlekit/imagebundle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bundlekit/linalg.hpp"
#include "bundlekit/opspace.hpp"

namespace bundlekit {

double fd_tolerance(const ManifoldModel& model, double scale) {
  const double h = model.spacing_max();
  const double s = std::max(1.0, scale);
  return 25.0 * h * h * s * s;
}

ProjectionField make_projection_field(C1Field field, double tol) {
  if (field.rows() != field.cols()) throw std::invalid_argument("projection field must be square");
  const ManifoldModel& model = field.model();
  const int d = field.rows();

  int rank = -1;
  double dsup = 0.0;
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    const Matrix& v = field.value.at(p);
    if ((v * v - v).cwiseAbs().maxCoeff() > tol || (v - v.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("field is not a pointwise orthogonal projection");
    const int r = static_cast<int>(std::lround(v.real().trace()));
    if (rank < 0) rank = r;
    if (r != rank) throw std::invalid_argument("projection rank is not constant");
    dsup = std::max(dsup, field.deriv.fiber_norm(p));
  }
  if (rank < 1 || rank > d) throw std::invalid_argument("projection rank out of range");

  ProjectionField proj;
  proj.field = std::move(field);
  proj.rank = rank;
  proj.deriv_sup = dsup;
  return proj;
}

double select_radius(const ManifoldModel& model, const ProjectionField& proj, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("radius candidate must be positive");
  const double gamma = 1.0;  // sup ||g||^{1/2} on the flat models
  const double cap = 0.9 * model.injectivity_radius();
  if (proj.deriv_sup <= 0.0) return std::min(s, cap);
  double r = 0.9 * std::min(s, 1.0 / (4.0 * gamma * proj.deriv_sup));
  return std::min(r, cap);
}

CheckReport drift_check(const ManifoldModel& model, const ProjectionField& proj, double r,
                        const std::vector<std::size_t>& centers) {
  double max_drift = 0.0;
  double chain_violation = 0.0;
  Table profile;
  profile.header = {"geodesic_distance", "projection_drift"};

  bool first_chart = true;
  for (std::size_t c : centers) {
    const Chart chart = normal_chart(model, c, r);
    std::vector<std::size_t> pts = chart.window.points;
    if (pts.size() > 220) {  // keep the pair loop bounded; sup over a subset stays a lower bound
      std::vector<std::size_t> sub;
      const std::size_t stride = (pts.size() + 219) / 220;
      for (std::size_t i = 0; i < pts.size(); i += stride) sub.push_back(pts[i]);
      pts = std::move(sub);
    }
    double chart_dsup = 0.0;
    for (std::size_t p : chart.window.points)
      chart_dsup = std::max(chart_dsup, proj.field.deriv.fiber_norm(p));

    for (std::size_t a = 0; a < pts.size(); ++a) {
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        const double drift = op_norm(proj.field.value.at(pts[a]) - proj.field.value.at(pts[b]));
        max_drift = std::max(max_drift, drift);
        const double dist = model.distance(pts[a], pts[b]);
        chain_violation = std::max(chain_violation, drift - dist * chart_dsup);
      }
    }
    if (first_chart) {
      for (std::size_t p : chart.window.points)
        profile.rows.push_back({model.distance(p, c),
                                op_norm(proj.field.value.at(p) - proj.field.value.at(c))});
      first_chart = false;
    }
  }

  CheckReport report;
  report.append(make_check("projection_drift", "sup_{y,z in chart} ||P(y)-P(z)|| < 1/2",
                           max_drift, 0.5, -1e-12));
  report.append(make_check("mean_value_chain",
                           "||P(y)-P(z)|| <= |phi(y)-phi(z)| sup||dP|| on every chart",
                           chain_violation, 0.0, fd_tolerance(model, proj.deriv_sup)));
  report.tables["drift_profile"] = std::move(profile);
  return report;
}

Matrix inv_sqrt_eig(const Matrix& m) {
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("inverse square root needs a hermitian matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const auto& ev = eig.eigenvalues();
  if (ev(0) <= 0.0) throw std::invalid_argument("matrix is not positive definite");
  Eigen::VectorXd inv_sqrt = ev.cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal().toDenseMatrix().cast<Complex>() *
         eig.eigenvectors().adjoint();
}

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("need at least one quadrature node");
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  // Newton iteration on the Legendre polynomial, standard [-1,1] rule mapped
  // to [0,1].
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    gl.nodes[i] = 0.5 * (1.0 - x);  // account for the cos ordering; mapped below
    gl.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return gl;
}

Matrix inv_sqrt_quad(const Matrix& m, int nodes) {
  if (nodes < 16) throw std::invalid_argument("quadrature needs at least 16 nodes");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("inverse square root needs a hermitian matrix");
  const int n = static_cast<int>(m.rows());
  const double s = m.norm();  // Frobenius scale >= largest eigenvalue
  if (!(s > 0.0)) throw std::invalid_argument("matrix is not positive definite");

  const int half = nodes / 2;
  const GaussLegendre gl = gauss_legendre(half);
  const Matrix id = Matrix::Identity(n, n);
  Matrix acc = Matrix::Zero(n, n);
  for (int i = 0; i < half; ++i) {
    const double t = gl.nodes[i];
    const double w = gl.weights[i];
    acc += w * (s * t * t * id + m).partialPivLu().solve(id);
    acc += w * (s * id + t * t * m).partialPivLu().solve(id);
  }
  return (2.0 * std::sqrt(s) / M_PI) * acc;
}

FrameField build_frame(const ManifoldModel& model, const ProjectionField& proj,
                       std::size_t center, double r) {
  FrameField frame;
  frame.center = center;
  frame.chart = normal_chart(model, center, r);
  const int d = proj.field.rows();
  const int k = proj.rank;
  frame.base = range_basis(proj.field.value.at(center), k);

  Field w(model, d, k);
  frame.lambda = Field(model, k, k);
  double inv_sup = 0.0;
  for (std::size_t p : frame.chart.window.points) {
    const Matrix& pv = proj.field.value.at(p);
    const Matrix lam = frame.base.adjoint() * pv * frame.base;
    frame.lambda.at(p) = lam;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(lam);
    if (eig.eigenvalues()(0) <= 0.0)
      throw std::runtime_error("Gram operator lost positivity inside a chart");
    inv_sup = std::max(inv_sup, 1.0 / eig.eigenvalues()(0));
    w.at(p) = pv * frame.base * inv_sqrt_eig(lam);
  }
  frame.lambda_inv_sup = inv_sup;

  auto [dw, dmask] = derham_window(w, frame.chart.window);
  frame.w.value = std::move(w);
  frame.w.deriv = std::move(dw);
  frame.w.path = DerivPath::FiniteDifference;
  frame.w.vmask = frame.chart.window.member;
  frame.w.dmask = std::move(dmask);

  auto [dwa, dmask_a] = derham_window([&] {
    Field wa(model, k, d);
    for (std::size_t p : frame.chart.window.points) wa.at(p) = frame.w.value.at(p).adjoint();
    return wa;
  }(), frame.chart.window);
  double dsup = 0.0, dsup_a = 0.0;
  for (std::size_t p : frame.chart.window.points) {
    if (!frame.w.dok(p)) continue;
    dsup = std::max(dsup, frame.w.deriv.fiber_norm(p));
    dsup_a = std::max(dsup_a, dwa.fiber_norm(p));
  }
  frame.dw_sup = dsup;
  frame.dw_adjoint_sup = dsup_a;
  (void)dmask_a;
  return frame;
}

CheckReport frame_checks(const ManifoldModel& model, const FrameField& frame,
                         const ProjectionField& proj) {
  const int k = proj.rank;
  double unitary_err = 0.0, range_err = 0.0;
  double chart_dsup = 0.0;
  for (std::size_t p : frame.chart.window.points) {
    const Matrix& wv = frame.w.value.at(p);
    unitary_err = std::max(unitary_err,
                           (wv.adjoint() * wv - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());
    range_err = std::max(range_err,
                         (wv * wv.adjoint() - proj.field.value.at(p)).cwiseAbs().maxCoeff());
    chart_dsup = std::max(chart_dsup, proj.field.deriv.fiber_norm(p));
  }

  // Chart-level inverse-square-root derivative estimate (finite differences
  // on the assembled Lambda^{-1/2}).
  Field lam_inv_sqrt(model, k, k);
  double dlam_sup = 0.0, lam_inv32_sup = 0.0;
  for (std::size_t p : frame.chart.window.points) {
    lam_inv_sqrt.at(p) = inv_sqrt_eig(frame.lambda.at(p));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(frame.lambda.at(p));
    lam_inv32_sup = std::max(lam_inv32_sup, std::pow(eig.eigenvalues()(0), -1.5));
  }
  // sup ||d Lambda|| from the analytic derivative of P compressed by the base.
  for (std::size_t p : frame.chart.window.points) {
    Matrix stacked(static_cast<Eigen::Index>(model.dim()) * k, k);
    for (int a = 0; a < model.dim(); ++a)
      stacked.middleRows(static_cast<Eigen::Index>(a) * k, k) =
          frame.base.adjoint() * proj.field.deriv.component(a, p) * frame.base;
    dlam_sup = std::max(dlam_sup, op_norm(stacked));
  }
  auto [dlis, dlis_mask] = derham_window(lam_inv_sqrt, frame.chart.window);
  double dlis_sup = 0.0;
  for (std::size_t p : frame.chart.window.points)
    if (dlis_mask[p]) dlis_sup = std::max(dlis_sup, dlis.fiber_norm(p));

  const double fd_tol = fd_tolerance(model, proj.deriv_sup);
  CheckReport report;
  report.append(make_check("frame_unitary", "w(y)* w(y) = 1 on the chart", unitary_err, 0.0, 1e-8));
  report.append(make_check("frame_range", "w(y) w(y)* = P(y) on the chart", range_err, 0.0, 1e-8));
  report.append(make_check("gram_inverse_bound", "||Lambda^{-1}(y)|| < 2 on the chart",
                           frame.lambda_inv_sup, 2.0, -1e-12));
  report.append(make_check("frame_deriv_bound", "||d w|| <= 3 sqrt(2) sup||dP||", frame.dw_sup,
                           3.0 * std::sqrt(2.0) * chart_dsup, fd_tol));
  report.append(make_check("frame_adjoint_deriv_bound", "||d w*|| <= 3 sqrt(2) sup||dP||",
                           frame.dw_adjoint_sup, 3.0 * std::sqrt(2.0) * chart_dsup, fd_tol));
  report.append(make_check("inv_sqrt_deriv_bound",
                           "sup||d Lambda^{-1/2}|| <= sup||d Lambda|| sup||Lambda^{-3/2}||",
                           dlis_sup, dlam_sup * lam_inv32_sup, fd_tol));
  return report;
}

ImageBundleResult image_bundle(const ManifoldModel& model, const ProjectionField& proj, double r,
                               const PartitionOfUnity& pou) {
  const double h = model.spacing_max();
  if (r <= 2.0 * pou.epsilon + 2.0 * h)
    throw std::invalid_argument(
        "chart radius too small for the partition: need r > 2 eps + 2h");
  if (r >= model.injectivity_radius())
    throw std::invalid_argument("chart radius must stay below the injectivity radius");

  ImageBundleResult ib;
  ib.bundle.model = &model;
  ib.bundle.centers = pou.centers;
  ib.bundle.radius = r;
  ib.bundle.fiber_dim = proj.rank;

  const std::size_t m = pou.centers.size();
  ib.frames.reserve(m);
  for (std::size_t c : pou.centers) {
    ib.frames.push_back(build_frame(model, proj, c, r));
    ib.bundle.charts.push_back(ib.frames.back().chart);
  }

  ib.bundle.transitions.resize(m);
  double c_tau = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ib.bundle.transitions[i].resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      Field tau(model, proj.rank, proj.rank);
      ChartWindow overlap;
      overlap.member.assign(model.num_points(), 0);
      overlap.interior.assign(model.num_points(), 0);
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (!ib.bundle.charts[i].window.member[p] || !ib.bundle.charts[j].window.member[p])
          continue;
        overlap.member[p] = 1;
        overlap.points.push_back(p);
        tau.at(p) = ib.frames[i].w.value.at(p).adjoint() * ib.frames[j].w.value.at(p);
      }
      for (std::size_t p : overlap.points) {
        bool ok = true;
        for (int a = 0; a < model.dim() && ok; ++a)
          for (int step : {-1, 1}) {
            std::size_t q;
            if (!model.neighbor(p, a, step, q) || !overlap.member[q]) {
              ok = false;
              break;
            }
          }
        if (ok) overlap.interior[p] = 1;
      }
      auto [dtau, dmask] = derham_window(tau, overlap);
      C1Field t;
      t.value = std::move(tau);
      t.deriv = std::move(dtau);
      t.path = DerivPath::FiniteDifference;
      t.vmask = overlap.member;
      t.dmask = std::move(dmask);
      for (std::size_t p = 0; p < model.num_points(); ++p)
        if (t.dok(p)) c_tau = std::max(c_tau, t.deriv.fiber_norm(p));
      ib.bundle.transitions[i][j] = std::move(t);
    }
  }
  ib.bundle.c_tau = c_tau;
  return ib;
}

CheckReport image_bundle_checks(const ImageBundleResult& ib, const ProjectionField& proj) {
  const BundleSpec& bundle = ib.bundle;
  const ManifoldModel& model = *bundle.model;
  const std::size_t m = bundle.size();
  const int k = bundle.fiber_dim;

  const std::size_t stride =
      std::max<std::size_t>(1, (m * m * m * model.num_points()) / 2000000);
  double unitary_err = 0.0, cocycle_err = 0.0, chain_violation = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const C1Field& tau = bundle.transitions[i][j];
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (!tau.vok(p)) continue;
        const Matrix& t = tau.value.at(p);
        unitary_err = std::max(unitary_err,
                               op_norm(t.adjoint() * t - Matrix::Identity(k, k)));
        if (tau.dok(p) && ib.frames[i].w.dok(p) && ib.frames[j].w.dok(p)) {
          // Triangle chain through the frames at this point:
          // ||d tau_ij|| <= ||d w_i*|| + ||d w_j||.
          const double dwj = ib.frames[j].w.deriv.fiber_norm(p);
          Matrix adj_stacked(static_cast<Eigen::Index>(model.dim()) * k, proj.field.rows());
          for (int a = 0; a < model.dim(); ++a)
            adj_stacked.middleRows(static_cast<Eigen::Index>(a) * k, k) =
                ib.frames[i].w.deriv.component(a, p).adjoint();
          const double dwi_adj = op_norm(adj_stacked);
          chain_violation =
              std::max(chain_violation, tau.deriv.fiber_norm(p) - (dwi_adj + dwj));
        }
        if (p % stride != (i + j) % stride) continue;  // triple sweep subsampled
        for (std::size_t l = 0; l < m; ++l) {
          if (!bundle.charts[l].window.member[p] || !bundle.transitions[i][l].vok(p) ||
              !bundle.transitions[l][j].vok(p))
            continue;
          const Matrix lhs = bundle.transitions[i][l].value.at(p) *
                             bundle.transitions[l][j].value.at(p);
          cocycle_err = std::max(cocycle_err, (lhs - t).cwiseAbs().maxCoeff());
        }
      }
    }

  const double fd_tol = fd_tolerance(model, proj.deriv_sup);
  CheckReport report;
  report.append(make_check("image_transition_unitary", "tau* tau = 1 on overlaps", unitary_err,
                           0.0, 1e-8));
  report.append(make_check("image_cocycle", "tau_ij tau_jl = tau_il on triple overlaps",
                           cocycle_err, 0.0, 1e-8));
  report.append(make_check("image_deriv_bound", "C_tau <= 6 sqrt(2) sup||dP||", bundle.c_tau,
                           6.0 * std::sqrt(2.0) * proj.deriv_sup, fd_tol));
  report.append(make_check("image_deriv_chain",
                           "||d tau_ij|| <= ||d w_i*|| + ||d w_j|| pointwise", chain_violation,
                           0.0, fd_tol));
  return report;
}

}  // namespace bundlekit
