#pragma once

#include <functional>

#include "bundlekit/field.hpp"
#include "bundlekit/opspace.hpp"
#include "bundlekit/report.hpp"

namespace bundlekit {

/// A section of the standard module: a column field with its derivative.
using Section = C1Field;

double section_norm_1(const Section& s);

/// Pointwise inner product <s,t>(x) = <s(x), t(x)>, conjugate linear in s.
/// Its derivative follows the Leibniz rule of the sesquilinear form.
C1Field hermitian_form(const Section& s, const Section& t);

/// (alpha s)(x) = alpha(x) s(x);
/// d(alpha s) = (d alpha) s + (alpha (x) 1) ds, so the value/derivative pair
/// of the image is the jet block applied to the pair of s.
Section apply_morphism(const C1Field& alpha, const Section& s);

using SectionMap = std::function<Section(const Section&)>;

struct RecoveredField {
  C1Field field;                    // recovered operator field (fd derivative)
  double morphism_norm_estimate;    // lower estimate of the cb norm of the map
};

/// Reads an operator field back out of a black-box module map by probing with
/// constant sections (times the margin plateau on the box).  Rejects maps
/// that fail the module property beta(s f) = beta(s) f on sampled scalars.
RecoveredField recover_field(const ManifoldModel& model, const SectionMap& beta, int d_in,
                             int d_out);

/// Round trip: apply then recover a given field, plus the norm comparisons
/// ||recovered - original|| and ||recovered||_1 <= 2 * (measured map norm).
CheckReport morphism_roundtrip_check(const C1Field& alpha);

}  // namespace bundlekit
