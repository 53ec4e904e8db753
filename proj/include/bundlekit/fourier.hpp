#pragma once

#include <cstdint>

#include "bundlekit/field.hpp"
#include "bundlekit/rng.hpp"

namespace bundlekit {

/// Random trigonometric polynomial with modes |k|_inf <= degree and complex
/// Gaussian coefficients.  Derivatives are evaluated from the mode sum, so
/// the returned field carries exact (analytic-path) derivatives.
C1Field fourier_scalar(const ManifoldModel& model, int degree, Rng& rng, double amplitude = 1.0);

/// Entrywise Fourier matrix field, rows x cols.
C1Field fourier_matrix(const ManifoldModel& model, int rows, int cols, int degree, Rng& rng,
                       double amplitude = 1.0);

/// Real-valued random trigonometric polynomial.
C1Field real_fourier_scalar(const ManifoldModel& model, int degree, Rng& rng,
                            double amplitude = 1.0);

Matrix random_unitary(int n, Rng& rng);
Matrix random_hermitian(int n, Rng& rng);

/// Hermitian positive definite with unit largest eigenvalue and the requested
/// condition number, in a Haar-random basis.
Matrix random_spd(int n, double condition, Rng& rng);

/// Unitary field exp(i phase(x) A) for a real scalar field and a constant
/// hermitian generator; the derivative i (d phase) A u is exact because A
/// commutes with the exponential.
C1Field gauge_exponential(const C1Field& phase, const Matrix& generator);

/// u P0 u* for the rank-k coordinate projection P0; a smooth projection
/// valued field with exact derivatives.
C1Field conjugated_projector(const C1Field& gauge, int rank);

/// Closed-form rank-1 projection on a 1-d torus rotating `winding` times per
/// revolution; its derivative has constant norm |winding|.  Used as the
/// designed fast-rotating field for negative controls.
C1Field winding_projector(const ManifoldModel& model, int winding);

/// Smooth cutoff equal to 1 away from the box margin and 0 inside it; on the
/// torus identically 1.  `inner` is the coordinate (per axis) where the
/// plateau reaches 1, defaulting to twice the margin width.
C1Field margin_plateau(const ManifoldModel& model);

/// f * plateau, the margin-respecting version of a global field on the box.
C1Field apply_margin(const C1Field& f);

}  // namespace bundlekit
