#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "crystal/grid.hpp"
#include "crystal/model.hpp"

namespace crystal {

/// Abstract symmetric positive definite operator on cell fields.
/// Symmetry and positivity are spot-checked on random fields when a solve
/// starts in debug builds.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual ScalarField apply(const ScalarField& x) const = 0;
  virtual const GridSpec& grid() const = 0;
  /// Diagonal (or a positive approximation of it) for Jacobi preconditioning.
  virtual ScalarField jacobi_diag() const = 0;
};

struct SolverConfig {
  double cg_tol = 1e-10;        // relative residual
  int cg_max_iter = 5000;
  double picard_tol = 1e-9;     // relative update
  int picard_max_iter = 200;
  double picard_theta = 1.0;    // initial damping, halved on residual growth
  double theta_floor = 1.0 / 16.0;
  double fp_tol = 1e-10;        // relative residual of the coupled step
  int fp_max_iter = 400;
  double fp_omega = 1.0;        // step relaxation, halved on residual growth

  void validate() const;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CgBreakdown : SolverError {
  explicit CgBreakdown(const std::string& what) : SolverError(what) {}
};

struct CgNonConvergence : SolverError {
  int iterations;
  double residual;
  CgNonConvergence(int it, double res)
      : SolverError("cg_solve: no convergence after " + std::to_string(it) +
                    " iterations (relative residual " + std::to_string(res) + ")"),
        iterations(it),
        residual(res) {}
};

struct PicardNonConvergence : SolverError {
  int iterations;
  double residual;
  PicardNonConvergence(int it, double res)
      : SolverError("picard_p_laplacian: no convergence after " +
                    std::to_string(it) + " iterations (residual " +
                    std::to_string(res) + ")"),
        iterations(it),
        residual(res) {}
};

struct CgStats {
  int iterations = 0;
  double residual = 0.0;  // relative
};

/// Jacobi-preconditioned conjugate gradients.
/// Returns x with ||Ax - b|| <= cg_tol ||b|| in the cell norm.
ScalarField cg_solve(const LinearOperator& A, const ScalarField& b,
                     const SolverConfig& config, const ScalarField* x0 = nullptr,
                     CgStats* stats = nullptr);

/// Scalar diffusion coefficients frozen on faces.
struct FaceCoeffs {
  GridSpec grid;
  std::vector<double> ax, ay;
};

/// a_f = F(r_f^2) with r_f the face difference of u; the coefficient of the
/// lagged p-Laplacian solve.
FaceCoeffs flux_coefficients(const ScalarField& u, const ModelParams& params);

/// -div(a grad x) + c0 x with per-face coefficients a > 0. SPD for c0 > 0.
class WeightedLaplacian : public LinearOperator {
 public:
  WeightedLaplacian(FaceCoeffs a, double c0);
  ScalarField apply(const ScalarField& x) const override;
  const GridSpec& grid() const override { return a_.grid; }
  ScalarField jacobi_diag() const override;

 private:
  FaceCoeffs a_;
  double c0_;
};

/// -div([M + eps I] grad v) + eps v with the full mobility tensor.
///
/// Discretized as the five-point form for the (1+eps) I part plus a
/// cell-quadrature correction for N = M - I:
///
///   <A v, w> = (1+eps) sum_f dv dw wf + sum_c A G(v)^T N_c G(w) + eps <v,w>
///
/// where G is the cell-averaged gradient. The split keeps the operator
/// exactly symmetric, reduces to the scalar -(1+eps)Lap + eps at q = 0,
/// and is positive definite: the N part is negative semidefinite with
/// |N| < 1 while cell averaging is contractive against the face form.
class MobilityOperator : public LinearOperator {
 public:
  MobilityOperator(MobilityField M, double eps);
  ScalarField apply(const ScalarField& x) const override;
  const GridSpec& grid() const override { return M_.grid; }
  ScalarField jacobi_diag() const override;

 private:
  MobilityField M_;
  double eps_;
};

/// The discrete Dirichlet form of the mobility tensor alone,
/// sum_f dv^2 wf + sum_c A G(v)^T N_c G(v)  (>= 0); the "int M grad v . grad v"
/// entry of the step ledger, consistent with MobilityOperator by construction.
double mobility_form(const MobilityField& M, const ScalarField& v);

/// Solves -div([M + eps I] grad v) + eps v = rhs (homogeneous Neumann).
ScalarField solve_mobility_system(const MobilityField& M, const ScalarField& rhs,
                                  const ModelParams& params,
                                  const SolverConfig& config,
                                  CgStats* stats = nullptr);

/// Exact forward application of the regularized flux operator,
/// -div(F(|grad u|^2) grad u) + eps u  with per-face coefficient argument.
ScalarField apply_p_laplacian_forward(const ScalarField& u,
                                      const ModelParams& params);

struct PicardStats {
  int iterations = 0;
  double residual = 0.0;       // relative nonlinear residual
  double rel_update = 0.0;
  int cg_iterations_total = 0;
  bool theta_floor_hit = false;
  std::vector<double> energy_history;
};

/// Lagged-coefficient (Kachanov) solve of
///   -div(F(|grad u|^2) grad u) + eps u = psi   (homogeneous Neumann).
/// Each sweep freezes a = F(r^2) on faces and solves the SPD problem;
/// the update is damped by backtracking on the energy
/// Phi(u) + (eps/2) int u^2 - int psi u, which the exact solution minimizes.
ScalarField picard_p_laplacian(const ScalarField& psi, const ModelParams& params,
                               const SolverConfig& config,
                               const ScalarField* initial_guess = nullptr,
                               PicardStats* stats = nullptr);

}  // namespace crystal
