#include "crystal/solvers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>

namespace crystal {

namespace {

double l2_norm(const ScalarField& f) { return std::sqrt(cell_inner(f, f)); }

#ifndef NDEBUG
// Deterministic small-field generator for the construction-time contract
// checks of LinearOperator.
ScalarField probe_field(const GridSpec& g, std::uint64_t salt) {
  ScalarField f(g);
  std::uint64_t s = 0x9e3779b97f4a7c15ULL ^ salt;
  for (double& v : f.values) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
  }
  return f;
}

void spot_check_spd(const LinearOperator& A) {
  const ScalarField x = probe_field(A.grid(), 1);
  const ScalarField y = probe_field(A.grid(), 2);
  const ScalarField Ax = A.apply(x);
  const ScalarField Ay = A.apply(y);
  const double axy = cell_inner(Ax, y);
  const double xay = cell_inner(x, Ay);
  const double scale = std::abs(axy) + std::abs(xay) + 1e-300;
  assert(std::abs(axy - xay) <= 1e-10 * scale && "operator is not symmetric");
  assert(cell_inner(Ax, x) > 0.0 && "operator is not positive definite");
}
#endif

}  // namespace

void SolverConfig::validate() const {
  if (!(cg_tol > 0.0) || !(picard_tol > 0.0) || !(fp_tol > 0.0)) {
    throw std::invalid_argument("SolverConfig: tolerances must be positive");
  }
  if (cg_max_iter < 1 || picard_max_iter < 1 || fp_max_iter < 1) {
    throw std::invalid_argument("SolverConfig: max iterations must be >= 1");
  }
  if (!(picard_theta > 0.0) || picard_theta > 1.0 || !(fp_omega > 0.0) ||
      fp_omega > 1.0) {
    throw std::invalid_argument("SolverConfig: damping must lie in (0, 1]");
  }
}

ScalarField cg_solve(const LinearOperator& A, const ScalarField& b,
                     const SolverConfig& config, const ScalarField* x0,
                     CgStats* stats) {
#ifndef NDEBUG
  spot_check_spd(A);
#endif
  const GridSpec& g = A.grid();
  const double bnorm = l2_norm(b);
  ScalarField x = x0 ? *x0 : ScalarField(g);
  if (bnorm == 0.0 && !x0) {
    if (stats) *stats = {0, 0.0};
    return x;
  }
  const double target = config.cg_tol * (bnorm > 0.0 ? bnorm : 1.0);

  const ScalarField diag = A.jacobi_diag();
  ScalarField r(g), z(g), p(g);
  {
    const ScalarField Ax = A.apply(x);
    for (int c = 0; c < g.cell_count(); ++c) r.values[c] = b.values[c] - Ax.values[c];
  }
  auto precondition = [&](const ScalarField& in, ScalarField& out) {
    for (int c = 0; c < g.cell_count(); ++c) out.values[c] = in.values[c] / diag.values[c];
  };
  precondition(r, z);
  p = z;
  double rz = cell_inner(r, z);
  double rnorm = l2_norm(r);

  int it = 0;
  while (rnorm > target) {
    if (it >= config.cg_max_iter) {
      throw CgNonConvergence(it, rnorm / (bnorm > 0.0 ? bnorm : 1.0));
    }
    const ScalarField Ap = A.apply(p);
    const double curvature = cell_inner(p, Ap);
    if (!(curvature > 0.0)) {
      throw CgBreakdown("cg_solve: non-positive curvature, operator is not SPD");
    }
    const double alpha = rz / curvature;
    for (int c = 0; c < g.cell_count(); ++c) {
      x.values[c] += alpha * p.values[c];
      r.values[c] -= alpha * Ap.values[c];
    }
    precondition(r, z);
    const double rz_new = cell_inner(r, z);
    const double beta = rz_new / rz;
    for (int c = 0; c < g.cell_count(); ++c) p.values[c] = z.values[c] + beta * p.values[c];
    rz = rz_new;
    rnorm = l2_norm(r);
    ++it;
  }
  if (stats) *stats = {it, rnorm / (bnorm > 0.0 ? bnorm : 1.0)};
  return x;
}

FaceCoeffs flux_coefficients(const ScalarField& u, const ModelParams& params) {
  const GridSpec& g = u.grid;
  const FaceVectorField F = gradient(u);
  FaceCoeffs a;
  a.grid = g;
  a.ax.resize(g.xface_count());
  a.ay.resize(g.yface_count());
  for (int k = 0; k < g.xface_count(); ++k) a.ax[k] = flux_coeff(F.x[k] * F.x[k], params);
  for (int k = 0; k < g.yface_count(); ++k) a.ay[k] = flux_coeff(F.y[k] * F.y[k], params);
  return a;
}

WeightedLaplacian::WeightedLaplacian(FaceCoeffs a, double c0)
    : a_(std::move(a)), c0_(c0) {}

ScalarField WeightedLaplacian::apply(const ScalarField& x) const {
  const GridSpec& g = a_.grid;
  FaceVectorField flux = gradient(x);
  for (int k = 0; k < g.xface_count(); ++k) flux.x[k] *= a_.ax[k];
  for (int k = 0; k < g.yface_count(); ++k) flux.y[k] *= a_.ay[k];
  ScalarField out = divergence(flux);
  for (int c = 0; c < g.cell_count(); ++c) {
    out.values[c] = -out.values[c] + c0_ * x.values[c];
  }
  return out;
}

ScalarField WeightedLaplacian::jacobi_diag() const {
  const GridSpec& g = a_.grid;
  ScalarField d(g, c0_);
  const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double& v = d.at(i, j);
      if (i > 0) v += a_.ax[g.xface(i, j)] * ihx2;
      if (i + 1 < g.nx) v += a_.ax[g.xface(i + 1, j)] * ihx2;
      if (j > 0) v += a_.ay[g.yface(i, j)] * ihy2;
      if (j + 1 < g.ny) v += a_.ay[g.yface(i, j + 1)] * ihy2;
    }
  }
  return d;
}

MobilityOperator::MobilityOperator(MobilityField M, double eps)
    : M_(std::move(M)), eps_(eps) {}

ScalarField MobilityOperator::apply(const ScalarField& x) const {
  const GridSpec& g = M_.grid;
  const FaceVectorField F = gradient(x);
  const ScalarField lap = divergence(F);

  // N = M - I applied to the cell-averaged gradient, then spread back to
  // faces; the resulting divergence is the exact adjoint of the cell form.
  const CellVectorField cg = cell_average(F);
  std::vector<double> yx(g.cell_count()), yy(g.cell_count());
  for (int c = 0; c < g.cell_count(); ++c) {
    const SymTensor2& m = M_.cells[c];
    yx[c] = (m.m11 - 1.0) * cg.x[c] + m.m12 * cg.y[c];
    yy[c] = m.m12 * cg.x[c] + (m.m22 - 1.0) * cg.y[c];
  }
  FaceVectorField Z(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      Z.fx(i, j) = 0.5 * (yx[g.cell(i - 1, j)] + yx[g.cell(i, j)]);
    }
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      Z.fy(i, j) = 0.5 * (yy[g.cell(i, j - 1)] + yy[g.cell(i, j)]);
    }
  }
  const ScalarField divZ = divergence(Z);

  ScalarField out(g);
  for (int c = 0; c < g.cell_count(); ++c) {
    out.values[c] = -(1.0 + eps_) * lap.values[c] - divZ.values[c] + eps_ * x.values[c];
  }
  return out;
}

ScalarField MobilityOperator::jacobi_diag() const {
  const GridSpec& g = M_.grid;
  ScalarField d(g, eps_);
  const double cx = (1.0 + eps_) / (g.hx * g.hx), cy = (1.0 + eps_) / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double& v = d.at(i, j);
      if (i > 0) v += cx;
      if (i + 1 < g.nx) v += cx;
      if (j > 0) v += cy;
      if (j + 1 < g.ny) v += cy;
    }
  }
  return d;
}

double mobility_form(const MobilityField& M, const ScalarField& v) {
  const FaceVectorField F = gradient(v);
  double form = face_inner(F, F);
  const CellVectorField cg = cell_average(F);
  const double area = M.grid.cell_area();
  for (int c = 0; c < M.grid.cell_count(); ++c) {
    const SymTensor2& m = M.cells[c];
    form += area * ((m.m11 - 1.0) * cg.x[c] * cg.x[c] +
                    2.0 * m.m12 * cg.x[c] * cg.y[c] +
                    (m.m22 - 1.0) * cg.y[c] * cg.y[c]);
  }
  return form;
}

ScalarField solve_mobility_system(const MobilityField& M, const ScalarField& rhs,
                                  const ModelParams& params,
                                  const SolverConfig& config, CgStats* stats) {
  MobilityOperator A(M, params.eps);
  return cg_solve(A, rhs, config, nullptr, stats);
}

ScalarField apply_p_laplacian_forward(const ScalarField& u,
                                      const ModelParams& params) {
  const GridSpec& g = u.grid;
  FaceVectorField flux = gradient(u);
  for (double& r : flux.x) r = flux_coeff(r * r, params) * r;
  for (double& r : flux.y) r = flux_coeff(r * r, params) * r;
  ScalarField out = divergence(flux);
  for (int c = 0; c < g.cell_count(); ++c) {
    out.values[c] = -out.values[c] + params.eps * u.values[c];
  }
  return out;
}

namespace {

// The functional the p-Laplacian problem minimizes:
// Phi(u) + (eps/2) int u^2 - int psi u.
double picard_energy(const ScalarField& u, const ScalarField& psi,
                     const ModelParams& params) {
  return energy_phi(u, params) + 0.5 * params.eps * cell_inner(u, u) -
         cell_inner(psi, u);
}

double picard_residual(const ScalarField& u, const ScalarField& psi,
                       const ModelParams& params, double psi_scale) {
  const ScalarField r = apply_p_laplacian_forward(u, params);
  double acc = 0.0;
  for (int c = 0; c < u.grid.cell_count(); ++c) {
    const double d = r.values[c] - psi.values[c];
    acc += d * d;
  }
  return std::sqrt(acc * u.grid.cell_area()) / psi_scale;
}

}  // namespace

ScalarField picard_p_laplacian(const ScalarField& psi, const ModelParams& params,
                               const SolverConfig& config,
                               const ScalarField* initial_guess,
                               PicardStats* stats) {
  params.validate();
  config.validate();
  const GridSpec& g = psi.grid;
  const double psi_scale = std::max(l2_norm(psi), 1e-300);

  ScalarField u(g);
  if (initial_guess) {
    u = *initial_guess;
  } else {
    for (int c = 0; c < g.cell_count(); ++c) u.values[c] = psi.values[c] / params.eps;
  }

  PicardStats st;
  double energy = picard_energy(u, psi, params);
  double residual = picard_residual(u, psi, params, psi_scale);
  st.energy_history.push_back(energy);

  double theta = config.picard_theta;
  int success_streak = 0;
  SolverConfig inner = config;

  for (int m = 1; m <= config.picard_max_iter; ++m) {
    WeightedLaplacian A(flux_coefficients(u, params), params.eps);
    CgStats cg{};
    const ScalarField solved = cg_solve(A, psi, inner, &u, &cg);
    st.cg_iterations_total += cg.iterations;

    // Backtracking: the lagged solve is a descent direction for the energy,
    // so some theta always decreases it (up to the floor).
    double theta_try = theta;
    ScalarField trial(g);
    double trial_energy;
    for (;;) {
      for (int c = 0; c < g.cell_count(); ++c) {
        trial.values[c] = u.values[c] + theta_try * (solved.values[c] - u.values[c]);
      }
      trial_energy = picard_energy(trial, psi, params);
      if (trial_energy <= energy + 1e-12 * (std::abs(energy) + 1.0)) break;
      if (theta_try <= config.theta_floor) {
        st.theta_floor_hit = true;
        break;
      }
      theta_try = std::max(0.5 * theta_try, config.theta_floor);
    }

    double update_norm = 0.0, base_norm = 0.0;
    for (int c = 0; c < g.cell_count(); ++c) {
      const double d = trial.values[c] - u.values[c];
      update_norm += d * d;
      base_norm += trial.values[c] * trial.values[c];
    }
    const double rel_update =
        std::sqrt(update_norm) / std::max(std::sqrt(base_norm), 1e-300);

    const double new_residual = picard_residual(trial, psi, params, psi_scale);
    if (new_residual > residual) {
      theta = std::max(0.5 * theta_try, config.theta_floor);
      success_streak = 0;
    } else {
      if (++success_streak >= 2) theta = config.picard_theta;
    }

#ifndef NDEBUG
    assert(st.theta_floor_hit ||
           trial_energy <= energy + 1e-9 * (std::abs(energy) + 1.0));
#endif

    u = trial;
    energy = trial_energy;
    residual = new_residual;
    st.energy_history.push_back(energy);
    st.iterations = m;
    st.rel_update = rel_update;
    st.residual = residual;

    const bool converged =
        rel_update <= config.picard_tol && residual <= 10.0 * config.cg_tol;
    if (converged) {
      if (stats) *stats = st;
      return u;
    }
    // Sharpen the inner solves once the outer iteration is nearly done, so
    // the final residual is not limited by a sloppy linear solve.
    if (rel_update <= 100.0 * config.picard_tol) {
      inner.cg_tol = std::min(config.cg_tol, 0.1 * config.picard_tol);
    }
  }
  throw PicardNonConvergence(config.picard_max_iter, residual);
}

}  // namespace crystal
