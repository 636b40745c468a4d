#include "crystal/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crystal {

GridSpec::GridSpec(int nx_, int ny_, double hx_, double hy_)
    : nx(nx_), ny(ny_), hx(hx_), hy(hy_) {
  if (nx < 2 || ny < 2) {
    throw std::invalid_argument("GridSpec: nx and ny must be at least 2");
  }
  if (!(hx > 0.0) || !(hy > 0.0)) {
    throw std::invalid_argument("GridSpec: hx and hy must be positive");
  }
}

void ScalarField::validate() const {
  if (static_cast<int>(values.size()) != grid.cell_count()) {
    throw std::invalid_argument("ScalarField: size mismatch with grid");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ScalarField: non-finite value");
    }
  }
}

void FaceVectorField::validate() const {
  if (static_cast<int>(x.size()) != grid.xface_count() ||
      static_cast<int>(y.size()) != grid.yface_count()) {
    throw std::invalid_argument("FaceVectorField: size mismatch with grid");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("FaceVectorField: non-finite value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw std::invalid_argument("FaceVectorField: non-finite value");
  }
  for (int j = 0; j < grid.ny; ++j) {
    if (fx(0, j) != 0.0 || fx(grid.nx, j) != 0.0) {
      throw std::invalid_argument("FaceVectorField: nonzero boundary x-face");
    }
  }
  for (int i = 0; i < grid.nx; ++i) {
    if (fy(i, 0) != 0.0 || fy(i, grid.ny) != 0.0) {
      throw std::invalid_argument("FaceVectorField: nonzero boundary y-face");
    }
  }
}

double xface_weight(const GridSpec& g, int i) {
  const double w = g.hx * g.hy;
  return (i == 0 || i == g.nx) ? 0.5 * w : w;
}

double yface_weight(const GridSpec& g, int j) {
  const double w = g.hx * g.hy;
  return (j == 0 || j == g.ny) ? 0.5 * w : w;
}

FaceVectorField gradient(const ScalarField& f) {
  const GridSpec& g = f.grid;
  FaceVectorField F(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      F.fx(i, j) = (f.at(i, j) - f.at(i - 1, j)) / g.hx;
    }
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      F.fy(i, j) = (f.at(i, j) - f.at(i, j - 1)) / g.hy;
    }
  }
  return F;
}

ScalarField divergence(const FaceVectorField& F) {
  const GridSpec& g = F.grid;
  ScalarField d(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      d.at(i, j) = (F.fx(i + 1, j) - F.fx(i, j)) / g.hx +
                   (F.fy(i, j + 1) - F.fy(i, j)) / g.hy;
    }
  }
  return d;
}

double integrate(const ScalarField& f) {
  // Kahan summation keeps the telescoping identities at roundoff level.
  double sum = 0.0, comp = 0.0;
  for (double v : f.values) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum * f.grid.cell_area();
}

double lp_norm_faces(const FaceVectorField& F, double p) {
  if (!(p > 1.0)) {
    throw std::invalid_argument("lp_norm_faces: p must exceed 1");
  }
  const GridSpec& g = F.grid;
  double sum = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      sum += std::pow(std::abs(F.fx(i, j)), p) * xface_weight(g, i);
    }
  }
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      sum += std::pow(std::abs(F.fy(i, j)), p) * yface_weight(g, j);
    }
  }
  return std::pow(sum, 1.0 / p);
}

double cell_inner(const ScalarField& f, const ScalarField& g) {
  double sum = 0.0, comp = 0.0;
  const std::size_t n = f.values.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double y = f.values[k] * g.values[k] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum * f.grid.cell_area();
}

double face_inner(const FaceVectorField& F, const FaceVectorField& G) {
  const GridSpec& g = F.grid;
  double sum = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      sum += F.fx(i, j) * G.fx(i, j) * xface_weight(g, i);
    }
  }
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      sum += F.fy(i, j) * G.fy(i, j) * yface_weight(g, j);
    }
  }
  return sum;
}

CellVectorField cell_average(const FaceVectorField& F) {
  const GridSpec& g = F.grid;
  CellVectorField c;
  c.grid = g;
  c.x.assign(g.cell_count(), 0.0);
  c.y.assign(g.cell_count(), 0.0);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      c.x[g.cell(i, j)] = 0.5 * (F.fx(i, j) + F.fx(i + 1, j));
      c.y[g.cell(i, j)] = 0.5 * (F.fy(i, j) + F.fy(i, j + 1));
    }
  }
  return c;
}

void reconstruct_at_xface(const FaceVectorField& F, int i, int j,
                          double& normal, double& tangential) {
  const GridSpec& g = F.grid;
  normal = F.fx(i, j);
  double sum = 0.0;
  int count = 0;
  // y-faces of the (up to two) cells sharing this x-face
  for (int ci : {i - 1, i}) {
    if (ci < 0 || ci >= g.nx) continue;
    sum += F.fy(ci, j) + F.fy(ci, j + 1);
    count += 2;
  }
  tangential = count ? sum / count : 0.0;
}

void reconstruct_at_yface(const FaceVectorField& F, int i, int j,
                          double& normal, double& tangential) {
  const GridSpec& g = F.grid;
  normal = F.fy(i, j);
  double sum = 0.0;
  int count = 0;
  for (int cj : {j - 1, j}) {
    if (cj < 0 || cj >= g.ny) continue;
    sum += F.fx(i, cj) + F.fx(i + 1, cj);
    count += 2;
  }
  tangential = count ? sum / count : 0.0;
}

}  // namespace crystal
