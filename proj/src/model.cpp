#include "crystal/model.hpp"

#include <cmath>
#include <stdexcept>

namespace crystal {

void ModelParams::validate() const {
  if (!(p > 1.0)) throw std::invalid_argument("ModelParams: p must exceed 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("ModelParams: beta must be >= 0");
  if (!(q >= 0.0)) throw std::invalid_argument("ModelParams: q must be >= 0");
  if (!(eps > 0.0)) throw std::invalid_argument("ModelParams: eps must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("ModelParams: dt must be positive");
  if (eps_mode == EpsMode::coupled && eps != dt) {
    throw std::invalid_argument("ModelParams: coupled mode requires eps == dt");
  }
}

ModelParams ModelParams::with_dt(double new_dt) const {
  ModelParams out = *this;
  out.dt = new_dt;
  if (out.eps_mode == EpsMode::coupled) out.eps = new_dt;
  return out;
}

SymTensor2 mobility_at(double gx, double gy, double q) {
  const double g2 = gx * gx + gy * gy;
  SymTensor2 M;
  if (g2 == 0.0) return M;  // facet: identity
  const double g = std::sqrt(g2);
  const double drop = 1.0 / (1.0 + q * g) - 1.0;
  M.m11 = 1.0 + (gx * gx / g2) * drop;
  M.m12 = (gx * gy / g2) * drop;
  M.m22 = 1.0 + (gy * gy / g2) * drop;
  return M;
}

double mobility_quadratic_form(const SymTensor2& M, double xi_x, double xi_y) {
  return M.m11 * xi_x * xi_x + 2.0 * M.m12 * xi_x * xi_y + M.m22 * xi_y * xi_y;
}

double flux_coeff(double s, const ModelParams& params) {
  const double t = s + params.eps;
  return std::pow(t, 0.5 * (params.p - 2.0)) + params.beta / std::sqrt(t);
}

MobilityField build_mobility(const ScalarField& u, double q) {
  const GridSpec& g = u.grid;
  MobilityField M;
  M.grid = g;
  M.q = q;
  M.cells.resize(g.cell_count());
  M.gradient_magnitude.resize(g.cell_count());
  const CellVectorField gc = cell_average(gradient(u));
  for (int c = 0; c < g.cell_count(); ++c) {
    M.cells[c] = mobility_at(gc.x[c], gc.y[c], q);
    M.gradient_magnitude[c] = std::hypot(gc.x[c], gc.y[c]);
  }
  return M;
}

double face_energy_density(double r, const ModelParams& params) {
  const double t = r * r + params.eps;
  return std::pow(t, 0.5 * params.p) / params.p + params.beta * std::sqrt(t);
}

namespace {

template <typename Density>
double face_quadrature(const ScalarField& u, Density&& e) {
  const GridSpec& g = u.grid;
  const FaceVectorField F = gradient(u);
  double sum = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      sum += e(F.fx(i, j)) * xface_weight(g, i);
    }
  }
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      sum += e(F.fy(i, j)) * yface_weight(g, j);
    }
  }
  return sum;
}

}  // namespace

double energy_phi(const ScalarField& u, const ModelParams& params) {
  const double raw = face_quadrature(
      u, [&](double r) { return face_energy_density(r, params); });
  return raw - u.grid.domain_area() * face_energy_density(0.0, params);
}

double energy_G(const ScalarField& u, const ModelParams& params) {
  return face_quadrature(u, [&](double r) {
    const double a = std::abs(r);
    return std::pow(a, params.p) / params.p + params.beta * a;
  });
}

double dissipation_integral(const ScalarField& v, const ScalarField& u,
                            const ModelParams& params) {
  const GridSpec& g = v.grid;
  const FaceVectorField Gv = gradient(v);
  const FaceVectorField Gu = gradient(u);
  double sum = 0.0;
  double n, t;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      reconstruct_at_xface(Gu, i, j, n, t);
      const double gu = std::hypot(n, t);
      const double r = Gv.fx(i, j);
      sum += r * r / (1.0 + params.q * gu) * xface_weight(g, i);
    }
  }
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      reconstruct_at_yface(Gu, i, j, n, t);
      const double gu = std::hypot(n, t);
      const double r = Gv.fy(i, j);
      sum += r * r / (1.0 + params.q * gu) * yface_weight(g, j);
    }
  }
  return sum;
}

}  // namespace crystal
