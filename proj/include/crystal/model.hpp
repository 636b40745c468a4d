#pragma once

#include <vector>

#include "crystal/grid.hpp"

namespace crystal {

enum class EpsMode { coupled, fixed };

/// Model and discretization parameters.
///
/// p      flux exponent (> 1)
/// beta   weight of the one-Laplacian energy term (>= 0)
/// q      mobility degeneracy strength (>= 0)
/// eps    regularization parameter: appears inside the flux coefficient and
///        as the zero-order coefficients of both equations
/// dt     time-step of the Rothe scheme
///
/// In coupled mode (the default) eps is tied to dt; fixed mode keeps a
/// mesh-independent eps for regularization studies.
struct ModelParams {
  double p = 2.0;
  double beta = 0.0;
  double q = 0.0;
  double eps = 1e-2;
  double dt = 1e-2;
  EpsMode eps_mode = EpsMode::coupled;

  /// Throws std::invalid_argument on any violated constraint.
  void validate() const;

  /// Returns a copy with dt set and eps recoupled when eps_mode == coupled.
  ModelParams with_dt(double new_dt) const;
};

/// Symmetric 2x2 tensor.
struct SymTensor2 {
  double m11 = 1.0;
  double m12 = 0.0;
  double m22 = 1.0;
};

/// The mobility tensor for a gradient sample (gx, gy):
///
///   M = I + (1/(1+q*g) - 1)/g^2 * [gx^2  gx*gy; gx*gy  gy^2],  g = |(gx,gy)|,
///
/// with M = I on facets (g = 0). Eigenvalues are 1/(1+q*g) along the
/// gradient and 1 across it.
SymTensor2 mobility_at(double gx, double gy, double q);

/// xi^T M xi.
double mobility_quadratic_form(const SymTensor2& M, double xi_x, double xi_y);

/// Regularized flux coefficient  F(s) = (s+eps)^((p-2)/2) + beta*(s+eps)^(-1/2),
/// s = squared gradient. Strictly positive and finite for all s >= 0.
double flux_coeff(double s, const ModelParams& params);

/// Per-cell mobility tensors sampled at the cell-averaged gradient of u.
struct MobilityField {
  GridSpec grid;
  std::vector<SymTensor2> cells;
  double q = 0.0;
  /// |grad u| sample each tensor was built from (for the spectral bounds).
  std::vector<double> gradient_magnitude;
};

MobilityField build_mobility(const ScalarField& u, double q);

/// Regularized surface energy by face quadrature,
///
///   Phi(u) = sum_faces e(r) w  -  |Omega| e(0),
///   e(r)   = (1/p)(r^2+eps)^(p/2) + beta (r^2+eps)^(1/2),
///
/// where r is the face difference. The constant shift normalizes the
/// facet state: Phi(const) = |Omega| (eps^(p/2)/p + beta eps^(1/2)), which
/// is also the global minimum. Differences of Phi obey the exact per-face
/// convexity inequality the step ledger relies on.
double energy_phi(const ScalarField& u, const ModelParams& params);

/// Unregularized surface energy  sum_faces ((1/p)|r|^p + beta |r|) w.
/// energy_phi approaches this as eps -> 0.
double energy_G(const ScalarField& u, const ModelParams& params);

/// Face quadrature of |grad v|^2 / (1 + q |grad u|), the coercivity
/// integrand of the dissipation. |grad u| at a face uses the full
/// reconstructed 2-vector (normal from the face, tangential averaged).
double dissipation_integral(const ScalarField& v, const ScalarField& u,
                            const ModelParams& params);

/// Per-face energy density e(r) and its derivative e'(r) = flux_coeff(r^2)*r.
double face_energy_density(double r, const ModelParams& params);

}  // namespace crystal
