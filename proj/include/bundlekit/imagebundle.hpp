#pragma once

#include <vector>

#include "bundlekit/field.hpp"
#include "bundlekit/partition.hpp"
#include "bundlekit/report.hpp"
#include "bundlekit/stabilize.hpp"

namespace bundlekit {

/// Projection valued field with validated algebra: P^2 = P = P* pointwise and
/// constant rank.
struct ProjectionField {
  C1Field field;
  int rank = 0;
  double deriv_sup = 0.0;  // sup ||dP||
};

ProjectionField make_projection_field(C1Field field, double tol = 1e-10);

/// Chart radius rule r = 0.9 * min(s, 1 / (4 * gamma * sup||dP||)) with
/// gamma = 1 on flat models, clamped below the injectivity radius; for a
/// constant projection min(s, 0.9 * r_inj).
double select_radius(const ManifoldModel& model, const ProjectionField& proj, double s);

/// Within every chart of radius r: sup over point pairs of ||P(y) - P(z)||
/// must stay below 1/2, and the mean-value estimate
/// ||P(y)-P(z)|| <= |phi(y)-phi(z)| sup||dP|| must hold.  Also fills the
/// drift-vs-distance profile table for the first chart.
CheckReport drift_check(const ManifoldModel& model, const ProjectionField& proj, double r,
                        const std::vector<std::size_t>& centers);

/// Inverse square root by eigendecomposition (the oracle route).
Matrix inv_sqrt_eig(const Matrix& m);

/// Inverse square root through the absolutely convergent integral
///   L^{-1/2} = (1/pi) Int_0^inf lambda^{-1/2} (lambda + L)^{-1} d lambda.
/// After splitting at the Frobenius scale s and substituting lambda = s t^2
/// on the head and lambda = s/u^2 on the tail, both pieces are smooth on
/// [0,1] and integrate with Gauss-Legendre nodes (half the budget each):
///   L^{-1/2} = (2 sqrt(s)/pi) [ Int_0^1 (s t^2 + L)^{-1} dt
///                             + Int_0^1 (s + u^2 L)^{-1} du ].
Matrix inv_sqrt_quad(const Matrix& m, int nodes);

struct GaussLegendre {
  std::vector<double> nodes;    // on (0,1)
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

/// Orthonormal frame for the image of P over one chart:
/// w(y) = P(y) V Lambda(y)^{-1/2} with V a basis of Im P(center) and
/// Lambda(y) = V* P(y) V.  Derivatives of the assembled frame are measured by
/// finite differences on the chart interior.
struct FrameField {
  std::size_t center = 0;
  Chart chart;
  Matrix base;                     // V, d x k
  C1Field w;                       // d x k; vmask = chart, dmask = interior
  Field lambda;                    // k x k Gram field on the chart
  double lambda_inv_sup = 0.0;     // sup ||Lambda^{-1}||
  double dw_sup = 0.0;             // sup ||d w|| (finite differences)
  double dw_adjoint_sup = 0.0;
};

FrameField build_frame(const ManifoldModel& model, const ProjectionField& proj,
                       std::size_t center, double r);

/// Frame unitarity, frame range, the Gram inverse bound, the derivative
/// bounds ||d w||, ||d w*|| <= 3 sqrt(2) sup||dP||, and the chart-level
/// inverse-square-root derivative estimate.
CheckReport frame_checks(const ManifoldModel& model, const FrameField& frame,
                         const ProjectionField& proj);

struct ImageBundleResult {
  BundleSpec bundle;               // transitions w_i* w_j, fiber dim = rank
  std::vector<FrameField> frames;
};

/// The bundle carried by Im P over the partition's chart cover.  Requires
/// r > 2 eps + 2h so every bump support sits strictly inside its chart.
ImageBundleResult image_bundle(const ManifoldModel& model, const ProjectionField& proj, double r,
                               const PartitionOfUnity& pou);

/// Unitarity and cocycle of the induced transitions, the bound
/// C_tau <= 6 sqrt(2) sup||dP||, and the pointwise chain
/// ||d tau_ij|| <= ||d w_i*|| + ||d w_j||.
CheckReport image_bundle_checks(const ImageBundleResult& ib, const ProjectionField& proj);

/// Tolerance allotted to second-order finite differences at the model's grid
/// spacing, scaled by the field's derivative magnitude.
double fd_tolerance(const ManifoldModel& model, double scale);

}  // namespace bundlekit
