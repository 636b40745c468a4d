#pragma once

#include <utility>
#include <vector>

#include "crystal/grid.hpp"
#include "crystal/model.hpp"
#include "crystal/solvers.hpp"

namespace crystal {

/// Per-step record of the energy ledger and solver effort.
/// The dissipation terms are stored already multiplied by their step
/// factors: dt * int M grad v . grad v, dt*eps * int |grad v|^2,
/// dt*eps * int v^2 (all nonnegative; dt*eps = dt^2 in coupled mode).
struct StepDiagnostics {
  double lyapunov = 0.0;  // Phi_eps(u_k) + (eps/2) int u_k^2
  double diss_mob = 0.0;
  double diss_grad = 0.0;
  double diss_mass = 0.0;
  double mass = 0.0;      // int u_k
  double fp_residual = 0.0;
  int fp_iterations = 0;
  int cg_iterations = 0;  // total linear-solver iterations in the step
};

struct StepState {
  int k = 0;
  double t = 0.0;
  ScalarField u;
  ScalarField v;
  int iterations = 0;       // fixed-point count
  double residual_tol = 0;  // tolerance the stored residual was accepted at
  StepDiagnostics diagnostics;
};

struct Trajectory {
  GridSpec grid;
  ModelParams params;  // dt = T/j, eps per mode
  double T = 0.0;
  int j = 0;
  std::vector<StepState> states;  // k = 0..j; states[0] holds u_0

  const ScalarField& u0() const { return states.front().u; }
};

struct FixedPointNonConvergence : SolverError {
  std::vector<double> residual_history;
  explicit FixedPointNonConvergence(std::vector<double> history)
      : SolverError("fixed_point_step: no convergence after " +
                    std::to_string(history.size()) + " iterations"),
        residual_history(std::move(history)) {}
};

/// Thrown by advance when a step fails; carries the completed part of the
/// trajectory and the failing step index.
struct StepFailure : SolverError {
  int step = 0;
  Trajectory partial;
  StepFailure(int k, Trajectory partial_so_far, const std::string& cause)
      : SolverError("step " + std::to_string(k) + " failed: " + cause),
        step(k),
        partial(std::move(partial_so_far)) {}
};

/// The two elliptic legs composed: psi -> u (regularized p-Laplacian solve)
/// -> v (mobility solve with data (w - u)/dt). Its fixed point in psi = v
/// is one time step. Solver errors are annotated with the failing leg.
std::pair<ScalarField, ScalarField> map_B(const ScalarField& psi,
                                          const ScalarField& w,
                                          const ModelParams& params,
                                          const SolverConfig& config);

/// One Rothe step: solves the coupled system
///   (u_k - u_prev)/dt - div([M(grad u_k) + eps I] grad v_k) + eps v_k = 0,
///   -div(F(|grad u_k|^2) grad u_k) + eps u_k = v_k,
/// by a lagged-coefficient outer iteration. Each sweep freezes the flux
/// coefficients and mobility at the current iterate and solves the coupled
/// linear system exactly (conjugate gradients in the inner product induced
/// by the frozen second-leg operator, which makes the composed operator
/// self-adjoint); the update is relaxed by omega, halved on residual
/// growth. v_k is the exact forward application of the flux operator to
/// u_k, so the second equation holds identically and the stored residual
/// is that of the first.
StepState fixed_point_step(const ScalarField& u_prev, const ModelParams& params,
                           const SolverConfig& config);

/// Runs j accepted steps of size dt = T/j from u0. Aborts on the first
/// non-convergent step by throwing StepFailure with the partial trajectory.
Trajectory advance(const ScalarField& u0, double T, int j,
                   const ModelParams& params, const SolverConfig& config);

/// Piecewise-linear-in-time interpolant; t in [0, T].
ScalarField eval_tilde_u(const Trajectory& traj, double t);
/// Piecewise-constant interpolants taking the right-endpoint value.
ScalarField eval_bar_u(const Trajectory& traj, double t);
ScalarField eval_bar_v(const Trajectory& traj, double t);

struct MassReport {
  std::vector<double> defect;  // int u_k (1 + dt eps^2) - int u_{k-1}, k = 1..j
  double max_abs_defect = 0.0;
  double max_rel_defect = 0.0;  // relative to |int u_0|
};

/// Verifies the discrete mass law per step; in coupled mode the closed form
/// is int u_k (1 + dt^3) = int u_{k-1}.
MassReport mass_law_check(const Trajectory& traj);

struct LedgerReport {
  // L(u_k) + dissipation terms - L(u_{k-1}) per step (<= 0 up to residuals)
  std::vector<double> slack;
  double max_slack = 0.0;
  int flagged = 0;  // steps with slack > ledger_tol
};

/// The discrete energy inequality, step by step; flags slack above
/// ledger_tol (absolute).
LedgerReport lyapunov_ledger(const Trajectory& traj, double ledger_tol);

/// Space-time L^p norm of grad(bar u_a) - grad(bar u_b) over the common
/// time refinement. Requires identical grids, identical initial data and
/// j_b a multiple of j_a.
double refinement_cauchy(const Trajectory& traj_a, const Trajectory& traj_b,
                         double p);

}  // namespace crystal
