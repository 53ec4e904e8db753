#include "bundlekit/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bundlekit/fourier.hpp"
#include "bundlekit/opspace.hpp"
#include "bundlekit/stdmodule.hpp"

namespace bundlekit {

namespace {

// Block field with blocks F(i,j) * sqrt(chi_i chi_j); the weights vanish with
// their derivatives outside the chart overlaps, where F may be undefined.
C1Field weighted_blocks(const PartitionOfUnity& pou, int block_rows, int block_cols,
                        const std::function<const C1Field*(std::size_t, std::size_t)>& entry) {
  const ManifoldModel& model = *pou.model;
  const std::size_t m = pou.size();
  C1Field out = make_zero(model, static_cast<int>(m) * block_rows,
                          static_cast<int>(m) * block_cols);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const C1Field* f = entry(i, j);
      if (!f) continue;
      const C1Field weight = mul(pou.sqrt_bumps[i], pou.sqrt_bumps[j]);
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        const double w = weight.value.at(p)(0, 0).real();
        if (w <= 0.0 && weight.deriv.fiber_norm(p) <= 0.0) continue;
        if (!f->dok(p))
          throw std::runtime_error("overlap field unavailable where the bumps live");
        out.value.at(p).block(static_cast<Eigen::Index>(i) * block_rows,
                              static_cast<Eigen::Index>(j) * block_cols, block_rows,
                              block_cols) = w * f->value.at(p);
        for (int k = 0; k < model.dim(); ++k)
          out.deriv.component(k, p).block(static_cast<Eigen::Index>(i) * block_rows,
                                          static_cast<Eigen::Index>(j) * block_cols, block_rows,
                                          block_cols) =
              weight.deriv.component(k, p)(0, 0).real() * f->value.at(p) +
              w * f->deriv.component(k, p);
      }
    }
  return out;
}

}  // namespace

CheckReport surjectivity_roundtrip(const ManifoldModel& model, const ProjectionField& proj,
                                   const PartitionOfUnity& pou, double radius_candidate,
                                   std::uint64_t seed) {
  const double r = select_radius(model, proj, radius_candidate);
  CheckReport report = drift_check(model, proj, r, pou.centers);

  const ImageBundleResult ib = image_bundle(model, proj, r, pou);
  report.merge(image_bundle_checks(ib, proj));

  const StabilizedProjection stab = build_projection(ib.bundle, pou);

  const std::size_t m = pou.size();
  const int d = proj.field.rows();
  const int k = proj.rank;

  // A_i = w_i* P sqrt(chi_i), stacked into an (m k) x d block column.
  std::vector<C1Field> blocks(m);
  for (std::size_t i = 0; i < m; ++i) {
    C1Field wp = mul(adjoint(ib.frames[i].w), proj.field);
    C1Field weighted = mul(pou.sqrt_bumps[i], wp);
    // The bump support sits strictly inside the chart, so clear the masked
    // garbage outside and make the block globally valid.
    C1Field clean = make_zero(model, k, d);
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      const double chi = pou.chi(i, p);
      const bool active = chi > 0.0 || pou.sqrt_bumps[i].deriv.fiber_norm(p) > 0.0;
      if (!active) continue;
      if (!weighted.dok(p))
        throw std::runtime_error("frame unavailable on a bump support");
      clean.value.at(p) = weighted.value.at(p);
      for (int a = 0; a < model.dim(); ++a)
        clean.deriv.component(a, p) = weighted.deriv.component(a, p);
    }
    clean.path = DerivPath::FiniteDifference;
    blocks[i] = std::move(clean);
  }
  std::vector<const C1Field*> parts;
  for (const C1Field& b : blocks) parts.push_back(&b);
  const C1Field a_field = vstack(parts);

  double gram_err = 0.0, range_err = 0.0, isometry_err = 0.0;
  Rng rng(seed);
  const C1Field xi = fourier_matrix(model, d, 1, 2, rng);
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    const Matrix& av = a_field.value.at(p);
    const Matrix& pv = proj.field.value.at(p);
    gram_err = std::max(gram_err, (av.adjoint() * av - pv).cwiseAbs().maxCoeff());
    range_err = std::max(range_err,
                         (av * av.adjoint() - stab.block_field.value.at(p)).cwiseAbs().maxCoeff());
    isometry_err = std::max(isometry_err,
                            std::abs((av * xi.value.at(p)).norm() - (pv * xi.value.at(p)).norm()));
  }

  // Finiteness bound: ||A||_1 <= sqrt(K) * C_frame * C_bump where C_frame
  // bounds the jet of w_i* P and C_bump the jet of sqrt(chi_i).
  double c_frame = 0.0, c_bump = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const C1Field wp = mul(adjoint(ib.frames[i].w), proj.field);
    c_frame = std::max(c_frame, morphism_norm_1(wp));
    c_bump = std::max(c_bump, morphism_norm_1(pou.sqrt_bumps[i]));
  }
  const double norm_a = morphism_norm_1(a_field);
  const double bound = std::sqrt(double(pou.multiplicity)) * c_frame * c_bump;

  report.append(make_check("equivalence_gram", "A(x)* A(x) = P(x)", gram_err, 0.0, 1e-8));
  report.append(make_check("equivalence_range", "A(x) A(x)* = P_stab(x)", range_err, 0.0, 1e-8));
  report.append(make_check("equivalence_isometry", "||A xi|| = ||P xi|| pointwise", isometry_err,
                           0.0, 1e-8));
  report.append(make_check("equivalence_norm_finite",
                           "||A||_1 <= sqrt(K) sup||jet(w* P)|| sup||jet(sqrt(chi))||", norm_a,
                           bound, fd_tolerance(model, std::max(1.0, proj.deriv_sup))));
  return report;
}

BundleMorphism global_morphism(const BundleSpec& source, const BundleSpec& target,
                               const C1Field& global) {
  if (source.centers != target.centers)
    throw std::invalid_argument("morphism needs bundles over the same chart cover");
  if (global.rows() != target.fiber_dim || global.cols() != source.fiber_dim)
    throw std::invalid_argument("global morphism field has wrong shape");
  BundleMorphism alpha;
  alpha.source = &source;
  alpha.target = &target;
  const std::size_t m = source.size();
  alpha.overlap.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    alpha.overlap[i].resize(m);
    for (std::size_t j = 0; j < m; ++j)
      alpha.overlap[i][j] =
          mul(mul(target.transitions[i][0], global), source.transitions[0][j]);
  }
  return alpha;
}

BundleMorphism identity_morphism(const BundleSpec& bundle) {
  return global_morphism(bundle, bundle,
                         make_constant(*bundle.model,
                                       Matrix::Identity(bundle.fiber_dim, bundle.fiber_dim)));
}

double morphism_compatibility_error(const BundleMorphism& alpha) {
  const BundleSpec& src = *alpha.source;
  const BundleSpec& dst = *alpha.target;
  const ManifoldModel& model = *src.model;
  const std::size_t m = src.size();
  const std::size_t stride =
      std::max<std::size_t>(1, (m * m * m * m * model.num_points()) / 4000000);
  double err = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l)
          for (std::size_t p = (i + j + k + l) % stride; p < model.num_points(); p += stride) {
            if (!dst.charts[i].window.member[p] || !dst.charts[k].window.member[p] ||
                !src.charts[l].window.member[p] || !src.charts[j].window.member[p])
              continue;
            const Matrix lhs = alpha.overlap[i][j].value.at(p);
            const Matrix rhs = dst.transitions[i][k].value.at(p) *
                               alpha.overlap[k][l].value.at(p) *
                               src.transitions[l][j].value.at(p);
            err = std::max(err, (lhs - rhs).cwiseAbs().maxCoeff());
          }
  return err;
}

C1Field module_morphism_field(const BundleMorphism& alpha, const PartitionOfUnity& pou) {
  if (alpha.source->centers != pou.centers)
    throw std::invalid_argument("morphism and partition must share centers");
  return weighted_blocks(pou, alpha.target->fiber_dim, alpha.source->fiber_dim,
                         [&](std::size_t i, std::size_t j) { return &alpha.overlap[i][j]; });
}

CheckReport faithfulness_roundtrip(const BundleMorphism& alpha, const BundleMorphism& beta,
                                   const PartitionOfUnity& pou, std::uint64_t seed,
                                   int section_trials) {
  const BundleSpec& src = *alpha.source;
  const BundleSpec& dst = *alpha.target;
  const ManifoldModel& model = *src.model;
  const std::size_t m = pou.size();
  const int dh = src.fiber_dim;
  const int dg = dst.fiber_dim;

  if (morphism_compatibility_error(alpha) > 1e-8)
    throw std::invalid_argument("overlap fields are not compatible with the cocycles");

  const C1Field a_field = module_morphism_field(alpha, pou);
  const StabilizedProjection p_src = build_projection(src, pou);
  const StabilizedProjection p_dst = build_projection(dst, pou);

  // Adjoint compatibility <Gamma(alpha) s, t> = <s, Gamma(alpha*) t> on
  // random section pairs.
  BundleMorphism alpha_star;
  alpha_star.source = alpha.target;
  alpha_star.target = alpha.source;
  alpha_star.overlap.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    alpha_star.overlap[i].resize(m);
    for (std::size_t j = 0; j < m; ++j) alpha_star.overlap[i][j] = adjoint(alpha.overlap[j][i]);
  }
  const C1Field a_star_field = module_morphism_field(alpha_star, pou);

  Rng rng(seed);
  double adjoint_err = 0.0, functorial_err = 0.0;
  const C1Field ba_field =
      module_morphism_field(  // beta o alpha from the composed overlap data
          [&] {
            BundleMorphism comp;
            comp.source = alpha.source;
            comp.target = beta.target;
            comp.overlap.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
              comp.overlap[i].resize(m);
              for (std::size_t j = 0; j < m; ++j)
                comp.overlap[i][j] = mul(beta.overlap[i][0], alpha.overlap[0][j]);
            }
            return comp;
          }(),
          pou);
  const C1Field b_field = module_morphism_field(beta, pou);

  for (int trial = 0; trial < section_trials; ++trial) {
    const C1Field s_raw = fourier_matrix(model, static_cast<int>(m) * dh, 1, 2, rng);
    const C1Field t_raw = fourier_matrix(model, static_cast<int>(m) * dg, 1, 2, rng);
    const C1Field s = apply_morphism(p_src.block_field, s_raw);
    const C1Field t = apply_morphism(p_dst.block_field, t_raw);

    const C1Field lhs = hermitian_form(apply_morphism(a_field, s), t);
    const C1Field rhs = hermitian_form(s, apply_morphism(a_star_field, t));
    for (std::size_t p = 0; p < model.num_points(); ++p)
      adjoint_err = std::max(adjoint_err,
                             std::abs(lhs.value.at(p)(0, 0) - rhs.value.at(p)(0, 0)));

    const C1Field via_comp = apply_morphism(ba_field, s);
    const C1Field via_two = apply_morphism(b_field, apply_morphism(a_field, s));
    for (std::size_t p = 0; p < model.num_points(); ++p)
      functorial_err = std::max(
          functorial_err, (via_comp.value.at(p) - via_two.value.at(p)).cwiseAbs().maxCoeff());
  }

  // Probe reconstruction of the overlap data.
  const double delta = partition_floor(pou);
  double recover_err = 0.0;
  std::size_t probed = 0, probed_total = 0;
  std::vector<Field> diag(m);  // recovered alpha_jj
  for (std::size_t j = 0; j < m; ++j) {
    diag[j] = Field(model, dg, dh);
    for (int col = 0; col < dh; ++col) {
      Matrix e = Matrix::Zero(dh, 1);
      e(col, 0) = 1.0;
      // Probe sqrt(chi_j) xi in frame j; its embedded image is P_src (e_j xi).
      C1Field probe = make_zero(model, static_cast<int>(m) * dh, 1);
      for (std::size_t p = 0; p < model.num_points(); ++p)
        probe.value.at(p) = p_src.block_field.value.at(p).middleCols(
            static_cast<Eigen::Index>(j) * dh, dh) * e;
      const C1Field image = [&] {
        C1Field out = make_zero(model, static_cast<int>(m) * dg, 1);
        for (std::size_t p = 0; p < model.num_points(); ++p)
          out.value.at(p) = a_field.value.at(p) * probe.value.at(p);
        return out;
      }();
      // Frame-j representative of the image section, then divide by
      // sqrt(chi_j) where chi_j is bounded below.
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        const double chi_j = pou.chi(j, p);
        if (chi_j < delta - 1e-15) continue;
        Matrix rep = Matrix::Zero(dg, 1);
        for (std::size_t i = 0; i < m; ++i) {
          const double w = pou.sqrt_bumps[i].value.at(p)(0, 0).real();
          if (w <= 0.0) continue;
          rep += dst.transitions[j][i].value.at(p) *
                 image.value.at(p).middleRows(static_cast<Eigen::Index>(i) * dg, dg) * w;
        }
        diag[j].at(p).col(col) = rep / std::sqrt(chi_j);
      }
    }
  }
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    if (model.kind() == ModelKind::EuclideanBox && !model.in_support_region(p)) continue;
    ++probed_total;
    // Best-covered chart at this point reconstructs every overlap field.
    std::size_t jstar = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < m; ++j)
      if (pou.chi(j, p) > best) {
        best = pou.chi(j, p);
        jstar = j;
      }
    if (best < delta - 1e-15) continue;
    ++probed;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        if (!dst.charts[i].window.member[p] || !src.charts[j].window.member[p] ||
            !dst.charts[jstar].window.member[p] || !src.charts[jstar].window.member[p])
          continue;
        const Matrix rec = dst.transitions[i][jstar].value.at(p) * diag[jstar].at(p) *
                           src.transitions[jstar][j].value.at(p);
        recover_err = std::max(
            recover_err, (rec - alpha.overlap[i][j].value.at(p)).cwiseAbs().maxCoeff());
      }
  }

  // Norm chain through the reconstruction constants.
  const double c_chi = chi_derivative_bound(pou);
  const double c_delta_chi = (1.0 / delta) * (1.0 + c_chi / delta);
  const double norm_a = morphism_norm_1(a_field);
  const double norm_p = morphism_norm_1(p_src.block_field);
  double diag_jet_sup = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t p = 0; p < model.num_points(); ++p) {
      if (pou.chi(j, p) < delta - 1e-15) continue;
      if (!alpha.overlap[j][j].dok(p)) continue;
      diag_jet_sup = std::max(diag_jet_sup, op_norm(jet_block(alpha.overlap[j][j], p)));
    }
  }

  CheckReport report;
  report.append(make_check("morphism_adjoint", "<Gamma(a) s, t> = <s, Gamma(a*) t>", adjoint_err,
                           0.0, 1e-8));
  report.append(make_check("morphism_functorial", "Gamma(b o a) = Gamma(b) Gamma(a) on sections",
                           functorial_err, 0.0, 1e-8));
  report.append(make_check("morphism_reconstruction",
                           "probe reconstruction returns the overlap fields", recover_err, 0.0,
                           1e-8));
  report.append(make_check("reconstruction_coverage", "probed region covers the grid",
                           double(probed_total - probed), 0.0, 0.0));
  report.append(make_check("morphism_norm_chain",
                           "sup||jet(a_jj)|| <= 2 ||Gamma(a)||_1 ||P||_1 C_{delta,chi}",
                           diag_jet_sup, 2.0 * norm_a * norm_p * c_delta_chi, 1e-9));
  return report;
}

CheckReport injectivity_check(const BundleMorphism& a, const BundleMorphism& b,
                              const PartitionOfUnity& pou) {
  const BundleSpec& src = *a.source;
  const ManifoldModel& model = *src.model;
  const std::size_t m = pou.size();
  const int dh = src.fiber_dim;

  double data_diff = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        if (!a.target->charts[i].window.member[p] || !src.charts[j].window.member[p]) continue;
        if (pou.chi(i, p) <= 0.0 || pou.chi(j, p) <= 0.0) continue;
        data_diff = std::max(data_diff, (a.overlap[i][j].value.at(p) -
                                         b.overlap[i][j].value.at(p)).cwiseAbs().maxCoeff());
      }

  const C1Field fa = module_morphism_field(a, pou);
  const C1Field fb = module_morphism_field(b, pou);
  const StabilizedProjection p_src = build_projection(src, pou);

  double probe_diff = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (int col = 0; col < dh; ++col) {
      Matrix e = Matrix::Zero(static_cast<Eigen::Index>(m) * dh, 1);
      e(static_cast<Eigen::Index>(j) * dh + col, 0) = 1.0;
      for (std::size_t p = 0; p < model.num_points(); ++p) {
        const Matrix s = p_src.block_field.value.at(p) * e;
        probe_diff = std::max(probe_diff,
                              ((fa.value.at(p) - fb.value.at(p)) * s).cwiseAbs().maxCoeff());
      }
    }

  const bool distinct_data = data_diff > 1e-12;
  const bool separated = probe_diff > 1e-10;
  CheckReport report;
  report.append(make_check("injectivity",
                           "distinct overlap data is separated by a probe section",
                           (distinct_data == separated) ? 0.0 : 1.0, 0.0, 0.0));
  report.append(make_check("injectivity_margin", "largest probe separation found", probe_diff,
                           probe_diff, 0.0));
  return report;
}

}  // namespace bundlekit
