#include "bundlekit/stdmodule.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlekit/fourier.hpp"

namespace bundlekit {

double section_norm_1(const Section& s) {
  return field_norm_1(s);
}

C1Field hermitian_form(const Section& s, const Section& t) {
  if (s.rows() != t.rows() || s.cols() != 1 || t.cols() != 1)
    throw std::invalid_argument("hermitian form needs sections of equal fiber dimension");
  return mul(adjoint(s), t);
}

Section apply_morphism(const C1Field& alpha, const Section& s) {
  if (alpha.cols() != s.rows()) throw std::invalid_argument("morphism/section shape mismatch");
  return mul(alpha, s);
}

RecoveredField recover_field(const ManifoldModel& model, const SectionMap& beta, int d_in,
                             int d_out) {
  const std::size_t np = model.num_points();
  const C1Field sigma = margin_plateau(model);

  // Basis probes xi_k * sigma; their images give the columns of the field
  // and, stacked with the image derivatives, a pointwise lower estimate of
  // the map norm.
  std::vector<Section> images;
  images.reserve(d_in);
  for (int k = 0; k < d_in; ++k) {
    Matrix e = Matrix::Zero(d_in, 1);
    e(k, 0) = 1.0;
    Section probe = mul(sigma, make_constant(model, e));
    Section image = beta(probe);
    if (image.rows() != d_out || image.cols() != 1)
      throw std::invalid_argument("module map returned a section of unexpected shape");
    images.push_back(std::move(image));
  }

  Field values(model, d_out, d_in);
  for (std::size_t p = 0; p < np; ++p) {
    const double s = sigma.value.at(p)(0, 0).real();
    if (s < 1e-3) continue;  // margin region; recovery undefined there
    for (int k = 0; k < d_in; ++k) values.at(p).col(k) = images[k].value.at(p) / s;
  }

  const int N = model.dim();
  double norm_estimate = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    if (sigma.value.at(p)(0, 0).real() < 1.0 - 1e-12) continue;  // only where probe is flat
    Matrix stacked(d_out * (1 + N), d_in);
    bool ok = true;
    for (int k = 0; k < d_in; ++k) {
      if (!images[k].dok(p)) {
        ok = false;
        break;
      }
      stacked.block(0, k, d_out, 1) = images[k].value.at(p);
      stacked.block(d_out, k, d_out * N, 1) = images[k].deriv.stacked(p);
    }
    if (ok) norm_estimate = std::max(norm_estimate, op_norm(stacked));
  }

  // Module-map validation on a couple of scalar multipliers.
  Rng rng(0x5eed);
  for (int trial = 0; trial < 2; ++trial) {
    const C1Field f = fourier_scalar(model, 2, rng);
    Matrix e = Matrix::Zero(d_in, 1);
    e(trial % d_in, 0) = 1.0;
    const Section s = mul(sigma, make_constant(model, e));
    const Section lhs = beta(mul(s, f));
    const Section rhs = mul(beta(s), f);
    double err = 0.0;
    for (std::size_t p = 0; p < np; ++p)
      err = std::max(err, (lhs.value.at(p) - rhs.value.at(p)).cwiseAbs().maxCoeff());
    if (err > 1e-8)
      throw std::invalid_argument("map is not a module morphism: beta(s f) != beta(s) f");
  }

  RecoveredField out;
  out.field = with_fd_derivative(std::move(values));
  out.morphism_norm_estimate = norm_estimate;
  return out;
}

CheckReport morphism_roundtrip_check(const C1Field& alpha) {
  const ManifoldModel& model = alpha.model();
  SectionMap beta = [&alpha](const Section& s) { return apply_morphism(alpha, s); };
  const RecoveredField rec = recover_field(model, beta, alpha.cols(), alpha.rows());

  const C1Field sigma = margin_plateau(model);
  double err = 0.0;
  double jet_sup = 0.0;  // over the flat probe region, matching the estimate
  for (std::size_t p = 0; p < model.num_points(); ++p) {
    const double s = sigma.value.at(p)(0, 0).real();
    if (s < 0.5) continue;
    err = std::max(err, (rec.field.value.at(p) - alpha.value.at(p)).cwiseAbs().maxCoeff());
    if (s >= 1.0 - 1e-12) jet_sup = std::max(jet_sup, op_norm(jet_block(alpha, p)));
  }

  CheckReport report;
  report.append(make_check("morphism_roundtrip", "recovering an applied field is the identity",
                           err, 0.0, 1e-10));
  report.append(make_check("morphism_norm_factor",
                           "||recovered||_1 <= 2 * (measured map norm)", jet_sup,
                           2.0 * rec.morphism_norm_estimate, 1e-9));
  return report;
}

}  // namespace bundlekit
