#include "crystal/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crystal {

namespace {

double l2_norm(const ScalarField& f) { return std::sqrt(cell_inner(f, f)); }

double lyapunov_energy(const ScalarField& u, const ModelParams& params) {
  return energy_phi(u, params) + 0.5 * params.eps * cell_inner(u, u);
}

/// Solves the frozen coupled system  x/dt + A_v(A_u x) = f  by conjugate
/// gradients in the A_u inner product, in which the composed operator is
/// self-adjoint and positive definite. Stopping is on the plain cell-norm
/// residual relative to ||f||.
ScalarField solve_coupled_frozen(const WeightedLaplacian& A_u,
                                 const MobilityOperator& A_v, double dt,
                                 const ScalarField& f, const ScalarField& x0,
                                 double rel_tol, int max_iter, int* iters) {
  const GridSpec& g = f.grid;
  const int n = g.cell_count();
  const double fnorm = l2_norm(f);
  const double target = rel_tol * (fnorm > 0.0 ? fnorm : 1.0);

  auto apply_C = [&](const ScalarField& x, ScalarField& Bx) -> ScalarField {
    Bx = A_u.apply(x);
    ScalarField out = A_v.apply(Bx);
    for (int c = 0; c < n; ++c) out.values[c] += x.values[c] / dt;
    return out;
  };

  ScalarField x = x0;
  ScalarField tmp(g);
  ScalarField r(g);
  {
    const ScalarField Cx = apply_C(x, tmp);
    for (int c = 0; c < n; ++c) r.values[c] = f.values[c] - Cx.values[c];
  }
  ScalarField p = r;
  ScalarField Br = A_u.apply(r);
  double rsB = cell_inner(Br, r);
  double rnorm = l2_norm(r);

  int it = 0;
  while (rnorm > target) {
    if (it >= max_iter) {
      throw CgNonConvergence(it, rnorm / (fnorm > 0.0 ? fnorm : 1.0));
    }
    ScalarField Bp(g);
    const ScalarField Cp = apply_C(p, Bp);
    const double curvature = cell_inner(Bp, Cp);
    if (!(curvature > 0.0)) {
      throw CgBreakdown("coupled solve: non-positive curvature");
    }
    const double alpha = rsB / curvature;
    for (int c = 0; c < n; ++c) {
      x.values[c] += alpha * p.values[c];
      r.values[c] -= alpha * Cp.values[c];
    }
    Br = A_u.apply(r);
    const double rsB_new = cell_inner(Br, r);
    const double beta = rsB_new / rsB;
    for (int c = 0; c < n; ++c) p.values[c] = r.values[c] + beta * p.values[c];
    rsB = rsB_new;
    rnorm = l2_norm(r);
    ++it;
  }
  if (iters) *iters += it;
  return x;
}

/// Relative residual of the first coupled equation at (u, v), with the
/// mobility evaluated at u itself.
double coupled_residual(const ScalarField& u, const ScalarField& v,
                        const ScalarField& u_prev, const ModelParams& params,
                        double scale) {
  const MobilityOperator A_v(build_mobility(u, params.q), params.eps);
  const ScalarField Av = A_v.apply(v);
  double acc = 0.0;
  for (int c = 0; c < u.grid.cell_count(); ++c) {
    const double r =
        (u.values[c] - u_prev.values[c]) / params.dt + Av.values[c];
    acc += r * r;
  }
  return std::sqrt(acc * u.grid.cell_area()) / scale;
}

}  // namespace

std::pair<ScalarField, ScalarField> map_B(const ScalarField& psi,
                                          const ScalarField& w,
                                          const ModelParams& params,
                                          const SolverConfig& config) {
  ScalarField u(psi.grid);
  try {
    u = picard_p_laplacian(psi, params, config);
  } catch (const SolverError& e) {
    throw SolverError(std::string("map_B p-laplacian leg: ") + e.what());
  }
  ScalarField rhs(psi.grid);
  for (int c = 0; c < psi.grid.cell_count(); ++c) {
    rhs.values[c] = (w.values[c] - u.values[c]) / params.dt;
  }
  try {
    ScalarField v = solve_mobility_system(build_mobility(u, params.q), rhs,
                                          params, config);
    return {std::move(u), std::move(v)};
  } catch (const SolverError& e) {
    throw SolverError(std::string("map_B mobility leg: ") + e.what());
  }
}

StepState fixed_point_step(const ScalarField& u_prev, const ModelParams& params,
                           const SolverConfig& config) {
  params.validate();
  config.validate();
  u_prev.validate();
  const GridSpec& g = u_prev.grid;
  const int n = g.cell_count();

  ScalarField f(g);
  for (int c = 0; c < n; ++c) f.values[c] = u_prev.values[c] / params.dt;
  const double scale = std::max(l2_norm(u_prev) / params.dt, 1e-300);
  const double coupled_tol = std::max(1e-13, 1e-3 * config.fp_tol);

  ScalarField u = u_prev;
  ScalarField v = apply_p_laplacian_forward(u, params);
  double residual = coupled_residual(u, v, u_prev, params, scale);
  std::vector<double> history;
  history.reserve(16);

  double omega = config.fp_omega;
  int success_streak = 0;
  int cg_total = 0;

  StepState state;
  state.residual_tol = config.fp_tol;

  for (int m = 1; m <= config.fp_max_iter; ++m) {
    if (residual <= config.fp_tol && m > 1) break;

    const WeightedLaplacian A_u(flux_coefficients(u, params), params.eps);
    const MobilityOperator A_v(build_mobility(u, params.q), params.eps);
    const ScalarField solved = solve_coupled_frozen(
        A_u, A_v, params.dt, f, u, coupled_tol, config.cg_max_iter, &cg_total);

    double omega_try = omega;
    ScalarField u_new(g), v_new(g);
    double new_residual;
    for (;;) {
      for (int c = 0; c < n; ++c) {
        u_new.values[c] = u.values[c] + omega_try * (solved.values[c] - u.values[c]);
      }
      v_new = apply_p_laplacian_forward(u_new, params);
      new_residual = coupled_residual(u_new, v_new, u_prev, params, scale);
      if (new_residual <= residual || omega_try <= config.theta_floor) break;
      omega_try = std::max(0.5 * omega_try, config.theta_floor);
    }
    if (new_residual > residual) {
      omega = std::max(0.5 * omega_try, config.theta_floor);
      success_streak = 0;
    } else {
      if (++success_streak >= 2) omega = config.fp_omega;
    }

    u = std::move(u_new);
    v = std::move(v_new);
    residual = new_residual;
    history.push_back(residual);
    state.iterations = m;

    if (residual <= config.fp_tol) break;
    if (m == config.fp_max_iter) throw FixedPointNonConvergence(history);
  }
  if (residual > config.fp_tol) throw FixedPointNonConvergence(history);

  state.u = std::move(u);
  state.v = std::move(v);

  StepDiagnostics& d = state.diagnostics;
  d.lyapunov = lyapunov_energy(state.u, params);
  const MobilityField M = build_mobility(state.u, params.q);
  const FaceVectorField Gv = gradient(state.v);
  d.diss_mob = params.dt * mobility_form(M, state.v);
  d.diss_grad = params.dt * params.eps * face_inner(Gv, Gv);
  d.diss_mass = params.dt * params.eps * cell_inner(state.v, state.v);
  d.mass = integrate(state.u);
  d.fp_residual = residual;
  d.fp_iterations = state.iterations;
  d.cg_iterations = cg_total;
  return state;
}

Trajectory advance(const ScalarField& u0, double T, int j,
                   const ModelParams& base_params, const SolverConfig& config) {
  if (j < 1) throw std::invalid_argument("advance: j must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("advance: T must be positive");
  u0.validate();

  Trajectory traj;
  traj.grid = u0.grid;
  traj.params = base_params.with_dt(T / j);
  traj.params.validate();
  traj.T = T;
  traj.j = j;
  traj.states.reserve(j + 1);

  StepState initial;
  initial.k = 0;
  initial.t = 0.0;
  initial.u = u0;
  initial.v = apply_p_laplacian_forward(u0, traj.params);
  initial.residual_tol = config.fp_tol;
  initial.diagnostics.lyapunov = lyapunov_energy(u0, traj.params);
  initial.diagnostics.mass = integrate(u0);
  traj.states.push_back(std::move(initial));

  for (int k = 1; k <= j; ++k) {
    try {
      StepState s = fixed_point_step(traj.states.back().u, traj.params, config);
      s.k = k;
      s.t = k * traj.params.dt;
      traj.states.push_back(std::move(s));
    } catch (const SolverError& e) {
      throw StepFailure(k, std::move(traj), e.what());
    }
  }
  return traj;
}

namespace {

// Index k with t in (t_{k-1}, t_k]; t = 0 maps to k = 0.
int interval_index(const Trajectory& traj, double t) {
  if (t < 0.0 || t > traj.T * (1.0 + 1e-12)) {
    throw std::out_of_range("interpolant: t outside [0, T]");
  }
  if (t <= 0.0) return 0;
  const double dt = traj.params.dt;
  int k = static_cast<int>(std::ceil(t / dt - 1e-12));
  return std::clamp(k, 1, traj.j);
}

}  // namespace

ScalarField eval_tilde_u(const Trajectory& traj, double t) {
  const int k = interval_index(traj, t);
  if (k == 0) return traj.states[0].u;
  const double dt = traj.params.dt;
  const double theta = std::clamp((t - (k - 1) * dt) / dt, 0.0, 1.0);
  const ScalarField& a = traj.states[k - 1].u;
  const ScalarField& b = traj.states[k].u;
  ScalarField out(traj.grid);
  for (int c = 0; c < traj.grid.cell_count(); ++c) {
    out.values[c] = theta * b.values[c] + (1.0 - theta) * a.values[c];
  }
  return out;
}

ScalarField eval_bar_u(const Trajectory& traj, double t) {
  return traj.states[interval_index(traj, t)].u;
}

ScalarField eval_bar_v(const Trajectory& traj, double t) {
  return traj.states[interval_index(traj, t)].v;
}

MassReport mass_law_check(const Trajectory& traj) {
  MassReport report;
  const double dt = traj.params.dt;
  const double eps = traj.params.eps;
  const double factor = 1.0 + dt * eps * eps;
  const double m0 = traj.states[0].diagnostics.mass;
  const double scale = std::max(std::abs(m0), 1e-300);
  for (int k = 1; k <= traj.j; ++k) {
    const double defect = traj.states[k].diagnostics.mass * factor -
                          traj.states[k - 1].diagnostics.mass;
    report.defect.push_back(defect);
    report.max_abs_defect = std::max(report.max_abs_defect, std::abs(defect));
  }
  report.max_rel_defect = report.max_abs_defect / scale;
  return report;
}

LedgerReport lyapunov_ledger(const Trajectory& traj, double ledger_tol) {
  LedgerReport report;
  for (int k = 1; k <= traj.j; ++k) {
    const StepDiagnostics& d = traj.states[k].diagnostics;
    const double slack = d.lyapunov + d.diss_mob + d.diss_grad + d.diss_mass -
                         traj.states[k - 1].diagnostics.lyapunov;
    report.slack.push_back(slack);
    report.max_slack = std::max(report.max_slack, slack);
    if (slack > ledger_tol) ++report.flagged;
  }
  return report;
}

double refinement_cauchy(const Trajectory& traj_a, const Trajectory& traj_b,
                         double p) {
  if (!(traj_a.grid == traj_b.grid)) {
    throw std::invalid_argument("refinement_cauchy: mismatched grids");
  }
  if (traj_a.u0().values != traj_b.u0().values) {
    throw std::invalid_argument("refinement_cauchy: different initial data");
  }
  if (traj_b.j % traj_a.j != 0) {
    throw std::invalid_argument("refinement_cauchy: j_b must be a multiple of j_a");
  }
  if (traj_a.T != traj_b.T) {
    throw std::invalid_argument("refinement_cauchy: different time horizons");
  }
  if (!(p > 1.0)) {
    throw std::invalid_argument("refinement_cauchy: p must exceed 1");
  }

  const GridSpec& g = traj_a.grid;
  std::vector<FaceVectorField> grad_a, grad_b;
  grad_a.reserve(traj_a.j + 1);
  grad_b.reserve(traj_b.j + 1);
  for (const StepState& s : traj_a.states) grad_a.push_back(gradient(s.u));
  for (const StepState& s : traj_b.states) grad_b.push_back(gradient(s.u));

  const double tau_b = traj_b.params.dt;
  const int ratio = traj_b.j / traj_a.j;
  double total = 0.0;
  for (int nfine = 1; nfine <= traj_b.j; ++nfine) {
    const int ka = (nfine + ratio - 1) / ratio;  // bar-u_a index on this interval
    const FaceVectorField& Fa = grad_a[ka];
    const FaceVectorField& Fb = grad_b[nfine];
    double sum = 0.0;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i <= g.nx; ++i) {
        sum += std::pow(std::abs(Fa.fx(i, j) - Fb.fx(i, j)), p) * xface_weight(g, i);
      }
    }
    for (int j = 0; j <= g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        sum += std::pow(std::abs(Fa.fy(i, j) - Fb.fy(i, j)), p) * yface_weight(g, j);
      }
    }
    total += tau_b * sum;
  }
  return std::pow(total, 1.0 / p);
}

}  // namespace crystal
