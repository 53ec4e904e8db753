#pragma once

#include <cstdint>

#include "bundlekit/field.hpp"
#include "bundlekit/linalg.hpp"
#include "bundlekit/report.hpp"

namespace bundlekit {

/// First-jet block representative of a field at a point,
///
///   [ a(x)      0        ]
///   [ da(x)   a(x) (x) 1 ]
///
/// mapping value+derivative columns to value+derivative columns.  Products of
/// fields go to products of blocks when the derivatives obey the Leibniz
/// rule, which is what makes the sup of its operator norm submultiplicative.
Matrix jet_block(const C1Field& a, std::size_t p);

/// sup over the grid of (||f(x)||^2 + ||df(x)||^2)^{1/2}.
double field_norm_1(const C1Field& f);
double field_norm_1_at(const C1Field& f, std::size_t p);

/// sup over the grid of the jet-block operator norm.
double morphism_norm_1(const C1Field& a);

/// Pointwise two-sided estimate
///   (||a|| + ||da||)/2 <= ||jet(a)|| <= ||a|| + ||da||.
CheckReport sandwich_check(const C1Field& a);

/// ||d(a*)(x)|| <= sqrt(N) ||da(x)||, measured as a worst-case ratio over
/// points with ||da(x)|| above `denom_floor`.
CheckReport adjoint_derivative_check(const C1Field& a, double tolerance = 1e-6,
                                     double denom_floor = 1e-9);

/// ||f g||_1 <= sqrt(5) ||f||_1 ||g||_1 together with the entrywise jet
/// multiplicativity residual of the product.
CheckReport product_norm_check(const C1Field& f, const C1Field& g);

enum class AmplifiedMap { Identity, Involution, Multiplication };

struct AmplifyResult {
  double measured = 0.0;  // largest ratio found (lower estimate of the cb norm)
  double bound = 0.0;     // sqrt(N) for the involution, sqrt(5) for products, 1 for id
  int level = 0;
  int samples = 0;
};

/// Randomized lower estimate of the amplified norm of the involution or of
/// the multiplication, at matrix level `level`, over seeded Fourier fields.
AmplifyResult cb_amplify(const ManifoldModel& model, AmplifiedMap map, int level, int samples,
                         std::uint64_t seed, int degree = 3);

}  // namespace bundlekit
