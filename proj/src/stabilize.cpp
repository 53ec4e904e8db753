#include "bundlekit/stabilize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bundlekit/fourier.hpp"
#include "bundlekit/opspace.hpp"
#include "bundlekit/stdmodule.hpp"

namespace bundlekit {

namespace {

double chart_radius(const ManifoldModel& model, double eps, double radius_scale) {
  if (radius_scale <= 2.0)
    throw std::invalid_argument("chart radius must exceed the doubled bump radius");
  return std::min(radius_scale * eps, 0.9 * model.injectivity_radius());
}

}  // namespace

BundleSpec make_bundle(const ManifoldModel& model, const PartitionOfUnity& pou,
                       BundleGenerator generator, int fiber_dim, std::uint64_t seed,
                       double radius_scale) {
  if (fiber_dim < 1) throw std::invalid_argument("fiber dimension must be >= 1");
  BundleSpec bundle;
  bundle.model = &model;
  bundle.centers = pou.centers;
  bundle.radius = chart_radius(model, pou.epsilon, radius_scale);
  if (bundle.radius <= 2.0 * pou.epsilon)
    throw std::invalid_argument("bump supports do not fit inside the charts");
  bundle.fiber_dim = fiber_dim;
  for (std::size_t c : bundle.centers) bundle.charts.push_back(normal_chart(model, c, bundle.radius));

  const std::size_t m = bundle.size();
  Rng rng(seed);
  std::vector<C1Field> gauges(m);
  for (std::size_t i = 0; i < m; ++i) {
    switch (generator) {
      case BundleGenerator::Trivial:
        gauges[i] = make_constant(model, Matrix::Identity(fiber_dim, fiber_dim));
        break;
      case BundleGenerator::GaugeFourier: {
        const C1Field phase = real_fourier_scalar(model, 2, rng);
        gauges[i] = gauge_exponential(phase, random_hermitian(fiber_dim, rng));
        break;
      }
      case BundleGenerator::NonUnitary:
        gauges[i] = fourier_matrix(model, fiber_dim, fiber_dim, 1, rng);
        break;
    }
  }

  bundle.transitions.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    bundle.transitions[i].resize(m);
    for (std::size_t j = 0; j < m; ++j)
      bundle.transitions[i][j] = mul(gauges[i], adjoint(gauges[j]));
  }

  double unitary_err = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const C1Field& tau = bundle.transitions[i][j];
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (!bundle.overlap(i, j, p)) continue;
        const Matrix& t = tau.value.at(p);
        unitary_err = std::max(unitary_err, op_norm(t.adjoint() * t -
                                                    Matrix::Identity(fiber_dim, fiber_dim)));
      }
    }
  if (unitary_err > 1e-10)
    throw std::invalid_argument("bundle generator produced non-unitary transitions");

  // Cocycle validation; point stride keeps this near-linear for large covers
  // while still sweeping every chart triple.
  const std::size_t stride =
      std::max<std::size_t>(1, (m * m * m * model.num_points()) / 2000000);
  double cocycle_err = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t p = (i + j + k) % stride; p < model.num_points(); p += stride) {
          if (!bundle.overlap(i, j, p) || !bundle.charts[k].window.member[p]) continue;
          const Matrix lhs = bundle.transitions[i][k].value.at(p) *
                             bundle.transitions[k][j].value.at(p);
          cocycle_err = std::max(
              cocycle_err, (lhs - bundle.transitions[i][j].value.at(p)).cwiseAbs().maxCoeff());
        }
  if (cocycle_err > 1e-10) throw std::invalid_argument("transition cocycle identity fails");

  double c_tau = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (!bundle.overlap(i, j, p)) continue;
        c_tau = std::max(c_tau, bundle.transitions[i][j].deriv.fiber_norm(p));
      }
  bundle.c_tau = c_tau;
  return bundle;
}

CheckReport verify_bundle(const BundleSpec& bundle) {
  const ManifoldModel& model = *bundle.model;
  const std::size_t m = bundle.size();
  const int d = bundle.fiber_dim;

  const std::size_t stride =
      std::max<std::size_t>(1, (m * m * m * model.num_points()) / 2000000);
  double unitary_err = 0.0, sym_err = 0.0, diag_err = 0.0, cocycle_err = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      if (!bundle.charts[i].window.member[p]) continue;
      diag_err = std::max(diag_err, (bundle.transitions[i][i].value.at(p) -
                                     Matrix::Identity(d, d)).cwiseAbs().maxCoeff());
    }
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (!bundle.overlap(i, j, p)) continue;
        const Matrix& t = bundle.transitions[i][j].value.at(p);
        unitary_err = std::max(unitary_err,
                               op_norm(t.adjoint() * t - Matrix::Identity(d, d)));
        sym_err = std::max(sym_err, (t.adjoint() - bundle.transitions[j][i].value.at(p))
                                        .cwiseAbs().maxCoeff());
        if (p % stride != (i + j) % stride) continue;  // triple sweep subsampled
        for (std::size_t k = 0; k < m; ++k) {
          if (!bundle.charts[k].window.member[p]) continue;
          const Matrix lhs = bundle.transitions[i][k].value.at(p) *
                             bundle.transitions[k][j].value.at(p);
          cocycle_err = std::max(cocycle_err, (lhs - t).cwiseAbs().maxCoeff());
        }
      }
  }

  CheckReport report;
  report.append(make_check("bundle_unitary", "tau* tau = 1 on overlaps", unitary_err, 0.0, 1e-10));
  report.append(make_check("bundle_diagonal", "tau_ii = 1", diag_err, 0.0, 1e-10));
  report.append(make_check("bundle_adjoint", "tau_ij = tau_ji*", sym_err, 0.0, 1e-10));
  report.append(make_check("bundle_cocycle", "tau_ij tau_jk = tau_ik on triple overlaps",
                           cocycle_err, 0.0, 1e-10));
  report.append(make_check("bundle_deriv_bound", "sup ||d tau|| finite", bundle.c_tau,
                           bundle.c_tau, 0.0));
  return report;
}

LocalSections local_sections_from_global(const BundleSpec& bundle, const C1Field& global) {
  if (global.cols() != 1 || global.rows() != bundle.fiber_dim)
    throw std::invalid_argument("global section has wrong fiber dimension");
  LocalSections out;
  out.bundle = &bundle;
  out.local.reserve(bundle.size());
  // Treat `global` as the frame-0 representative and transport it; the
  // cocycle identity makes the data compatible.  Only meaningful for bundles
  // whose transitions are defined on the whole grid (the gauge generators).
  for (std::size_t i = 0; i < bundle.size(); ++i)
    out.local.push_back(mul(bundle.transitions[i][0], global));
  return out;
}

LocalSections random_local_sections(const BundleSpec& bundle, Rng& rng, int degree) {
  const C1Field global = fourier_matrix(*bundle.model, bundle.fiber_dim, 1, degree, rng);
  LocalSections out;
  out.bundle = &bundle;
  out.local.reserve(bundle.size());
  for (std::size_t i = 0; i < bundle.size(); ++i)
    out.local.push_back(mul(bundle.transitions[i][0], global));
  return out;
}

double compatibility_error(const LocalSections& s) {
  const BundleSpec& bundle = *s.bundle;
  const ManifoldModel& model = *bundle.model;
  double err = 0.0;
  for (std::size_t i = 0; i < bundle.size(); ++i)
    for (std::size_t j = 0; j < bundle.size(); ++j)
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (!bundle.overlap(i, j, p)) continue;
        const Matrix lhs = s.local[i].value.at(p);
        const Matrix rhs = bundle.transitions[i][j].value.at(p) * s.local[j].value.at(p);
        err = std::max(err, (lhs - rhs).cwiseAbs().maxCoeff());
      }
  return err;
}

C1Field stabilize_embed(const PartitionOfUnity& pou, const LocalSections& s) {
  const BundleSpec& bundle = *s.bundle;
  if (bundle.centers != pou.centers)
    throw std::invalid_argument("bundle and partition must share centers");
  if (compatibility_error(s) > 1e-10)
    throw std::invalid_argument("local section data is not transition compatible");
  std::vector<C1Field> blocks;
  blocks.reserve(bundle.size());
  for (std::size_t i = 0; i < bundle.size(); ++i)
    blocks.push_back(mul(pou.sqrt_bumps[i], s.local[i]));
  std::vector<const C1Field*> parts;
  for (const C1Field& b : blocks) parts.push_back(&b);
  return vstack(parts);
}

LocalSections stabilize_project(const BundleSpec& bundle, const PartitionOfUnity& pou,
                                const C1Field& block_section) {
  const std::size_t m = bundle.size();
  const int d = bundle.fiber_dim;
  if (block_section.rows() != static_cast<int>(m) * d || block_section.cols() != 1)
    throw std::invalid_argument("block section has wrong shape");
  const ManifoldModel& model = *bundle.model;

  // Split the block column into its components t_i.
  std::vector<C1Field> t(m);
  for (std::size_t i = 0; i < m; ++i) {
    t[i] = make_zero(model, d, 1);
    t[i].path = block_section.path;
    t[i].vmask = block_section.vmask;
    t[i].dmask = block_section.dmask;
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      if (!t[i].vok(p)) continue;
      t[i].value.at(p) = block_section.value.at(p).middleRows(static_cast<Eigen::Index>(i) * d, d);
      for (int k = 0; k < model.dim(); ++k)
        t[i].deriv.component(k, p) =
            block_section.deriv.component(k, p).middleRows(static_cast<Eigen::Index>(i) * d, d);
    }
  }

  LocalSections out;
  out.bundle = &bundle;
  out.local.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    C1Field sj = make_zero(model, d, 1);
    for (std::size_t i = 0; i < m; ++i) {
      // tau_ji is only valid on the overlap; the bump factor vanishes with
      // its derivative outside, so restrict the product support explicitly.
      C1Field term = mul(pou.sqrt_bumps[i], t[i]);
      term = mul(bundle.transitions[j][i], term);
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (pou.chi(i, p) <= 0.0 || !bundle.overlap(j, i, p)) continue;
        sj.value.at(p) += term.value.at(p);
        for (int k = 0; k < model.dim(); ++k)
          sj.deriv.component(k, p) += term.deriv.component(k, p);
      }
    }
    sj.path = block_section.path;
    out.local.push_back(std::move(sj));
  }
  return out;
}

StabilizedProjection build_projection(const BundleSpec& bundle, const PartitionOfUnity& pou) {
  if (bundle.centers != pou.centers)
    throw std::invalid_argument("bundle and partition must share centers");
  const ManifoldModel& model = *bundle.model;
  const std::size_t m = bundle.size();
  const int d = bundle.fiber_dim;
  const int n = static_cast<int>(m) * d;

  C1Field block = make_zero(model, n, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const C1Field weight = mul(pou.sqrt_bumps[i], pou.sqrt_bumps[j]);
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        const double w = weight.value.at(p)(0, 0).real();
        const bool active = w > 0.0;
        const bool dactive = active || weight.deriv.fiber_norm(p) > 0.0;
        if (!active && !dactive) continue;
        if (!bundle.overlap(i, j, p))
          throw std::runtime_error("bump product reaches outside a chart overlap");
        if (!bundle.transitions[i][j].dok(p))
          throw std::runtime_error("transition derivative unavailable where the bumps live");
        const Matrix& tau = bundle.transitions[i][j].value.at(p);
        block.value.at(p).block(static_cast<Eigen::Index>(i) * d,
                                static_cast<Eigen::Index>(j) * d, d, d) = w * tau;
        for (int k = 0; k < model.dim(); ++k) {
          const Matrix dterm = weight.deriv.component(k, p)(0, 0).real() * tau +
                               w * bundle.transitions[i][j].deriv.component(k, p);
          block.deriv.component(k, p).block(static_cast<Eigen::Index>(i) * d,
                                            static_cast<Eigen::Index>(j) * d, d, d) = dterm;
        }
      }
    }

  StabilizedProjection proj;
  proj.blocks = static_cast<int>(m);
  proj.fiber_dim = d;
  double dsup = 0.0;
  for (std::size_t p = 0; p < model.num_points(); ++p)
    dsup = std::max(dsup, block.deriv.fiber_norm(p));
  proj.deriv_sup = dsup;
  proj.block_field = std::move(block);
  return proj;
}

CheckReport verify_projection(const StabilizedProjection& proj, const BundleSpec& bundle,
                              const PartitionOfUnity& pou, std::uint64_t seed) {
  const ManifoldModel& model = *bundle.model;
  const C1Field& P = proj.block_field;
  const int n = P.rows();

  double idem_err = 0.0, selfadj_err = 0.0, spectrum_err = 0.0;
  int rank_min = n, rank_max = 0;
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    if (model.kind() == ModelKind::EuclideanBox && !model.in_support_region(p)) continue;
    const Matrix& v = P.value.at(p);
    idem_err = std::max(idem_err, (v * v - v).cwiseAbs().maxCoeff());
    selfadj_err = std::max(selfadj_err, (v - v.adjoint()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (v + v.adjoint()));
    int rank = 0;
    for (int i = 0; i < n; ++i) {
      const double lam = eig.eigenvalues()(i);
      spectrum_err = std::max(spectrum_err, std::min(std::abs(lam), std::abs(lam - 1.0)));
      if (lam > 0.5) ++rank;
    }
    rank_min = std::min(rank_min, rank);
    rank_max = std::max(rank_max, rank);
  }

  // P agrees with embed o project on random block sections.
  Rng rng(seed);
  double factor_err = 0.0, isometry_err = 0.0, roundtrip_err = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const LocalSections s = random_local_sections(bundle, rng);
    const C1Field embedded = stabilize_embed(pou, s);

    // Fiberwise isometry of the embedding.
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      const double lhs = embedded.value.at(p).norm();
      const double rhs = s.local[0].value.at(p).norm();  // all frames are unitary images
      isometry_err = std::max(isometry_err, std::abs(lhs - rhs));
    }

    const LocalSections back = stabilize_project(bundle, pou, embedded);
    for (std::size_t i = 0; i < bundle.size(); ++i)
      for (std::size_t p : bundle.charts[i].window.points)
        roundtrip_err = std::max(roundtrip_err, (back.local[i].value.at(p) -
                                                 s.local[i].value.at(p)).cwiseAbs().maxCoeff());

    const C1Field generic = fourier_matrix(model, n, 1, 2, rng);
    const C1Field via_p = apply_morphism(P, generic);
    const C1Field via_maps = stabilize_embed(pou, stabilize_project(bundle, pou, generic));
    for (std::size_t p = 0; p < model.num_points(); ++p)
      factor_err = std::max(factor_err,
                            (via_p.value.at(p) - via_maps.value.at(p)).cwiseAbs().maxCoeff());
  }

  const double k32 = std::pow(double(pou.multiplicity), 1.5);
  const double bound = k32 * (bundle.c_tau + pou.deriv_bound_analytic);

  CheckReport report;
  report.append(make_check("projection_idempotent", "P(x)^2 = P(x)", idem_err, 0.0, 1e-10));
  report.append(make_check("projection_selfadjoint", "P(x) = P(x)*", selfadj_err, 0.0, 1e-10));
  report.append(make_check("projection_spectrum", "eigenvalues of P(x) lie in {0,1}",
                           spectrum_err, 0.0, 1e-8));
  report.append(make_check("projection_rank", "rank P(x) = fiber dimension everywhere",
                           double(rank_max - rank_min) +
                               std::abs(double(rank_min) - bundle.fiber_dim),
                           0.0, 0.0));
  report.append(make_check("projection_roundtrip", "project o embed = identity on sections",
                           roundtrip_err, 0.0, 1e-10));
  report.append(make_check("embedding_isometry", "||embed(s)(x)|| = ||s(x)|| pointwise",
                           isometry_err, 0.0, 1e-10));
  report.append(make_check("projection_factors", "P = embed o project on block sections",
                           factor_err, 0.0, 1e-10));
  report.append(make_check("projection_deriv_bound",
                           "sup ||dP|| <= K^{3/2} (C_tau + C_chi)", proj.deriv_sup, bound, 1e-9));
  return report;
}

}  // namespace bundlekit
