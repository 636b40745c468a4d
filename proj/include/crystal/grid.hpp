#pragma once

#include <cstddef>
#include <vector>

namespace crystal {

/// Uniform rectangular grid of nx * ny cells with spacings hx, hy.
/// Scalars live at cell centers, vector quantities on cell faces
/// (MAC layout). The domain is [0, nx*hx] x [0, ny*hy].
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;

  GridSpec() = default;
  GridSpec(int nx_, int ny_, double hx_, double hy_);

  int cell_count() const { return nx * ny; }
  int xface_count() const { return (nx + 1) * ny; }
  int yface_count() const { return nx * (ny + 1); }

  int cell(int i, int j) const { return j * nx + i; }
  int xface(int i, int j) const { return j * (nx + 1) + i; }  // i in [0, nx]
  int yface(int i, int j) const { return j * nx + i; }        // j in [0, ny]

  double cell_area() const { return hx * hy; }
  double domain_area() const { return nx * hx * ny * hy; }

  /// Cell-center coordinates.
  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }

  bool operator==(const GridSpec& o) const {
    return nx == o.nx && ny == o.ny && hx == o.hx && hy == o.hy;
  }
};

/// Cell-centered grid function, row-major (j outer, i inner).
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g) : grid(g), values(g.cell_count(), 0.0) {}
  ScalarField(const GridSpec& g, double fill) : grid(g), values(g.cell_count(), fill) {}

  double& at(int i, int j) { return values[grid.cell(i, j)]; }
  double at(int i, int j) const { return values[grid.cell(i, j)]; }

  /// Throws std::invalid_argument if the size is wrong or a value is not finite.
  void validate() const;
};

/// Face-centered vector quantity: x-components on the (nx+1)*ny vertical
/// faces, y-components on the nx*(ny+1) horizontal faces. Components on
/// boundary faces are kept identically zero (homogeneous Neumann).
struct FaceVectorField {
  GridSpec grid;
  std::vector<double> x;  // size (nx+1)*ny
  std::vector<double> y;  // size nx*(ny+1)

  FaceVectorField() = default;
  explicit FaceVectorField(const GridSpec& g)
      : grid(g), x(g.xface_count(), 0.0), y(g.yface_count(), 0.0) {}

  double& fx(int i, int j) { return x[grid.xface(i, j)]; }
  double fx(int i, int j) const { return x[grid.xface(i, j)]; }
  double& fy(int i, int j) { return y[grid.yface(i, j)]; }
  double fy(int i, int j) const { return y[grid.yface(i, j)]; }

  /// Throws if sizes are wrong, a value is not finite, or a boundary
  /// component is nonzero.
  void validate() const;
};

/// Quadrature weight of a face: hx*hy, halved on boundary faces so the
/// per-family weights sum to the domain area.
double xface_weight(const GridSpec& g, int i);
double yface_weight(const GridSpec& g, int j);

/// Two-point face differences; boundary faces are zero (mirror ghosts).
FaceVectorField gradient(const ScalarField& f);

/// Net face flux per unit cell area; exact discrete adjoint of gradient
/// under the face weights (summation by parts).
ScalarField divergence(const FaceVectorField& F);

/// Discrete integral over the domain (compensated summation).
double integrate(const ScalarField& f);

/// ( sum over faces |component|^p * weight )^(1/p). Requires p > 1.
double lp_norm_faces(const FaceVectorField& F, double p);

/// Cell inner product  sum f*g*hx*hy.
double cell_inner(const ScalarField& f, const ScalarField& g);

/// Weighted face inner product  sum over both families F*G*weight.
double face_inner(const FaceVectorField& F, const FaceVectorField& G);

/// Cell-centered 2-vector reconstruction: per cell, the mean of the two
/// adjacent face components in each direction.
struct CellVectorField {
  GridSpec grid;
  std::vector<double> x, y;  // cell-indexed
};
CellVectorField cell_average(const FaceVectorField& F);

/// Full gradient 2-vector reconstructed at a face: the face's own normal
/// component plus the tangential component averaged from the adjacent
/// faces of the other family.
void reconstruct_at_xface(const FaceVectorField& F, int i, int j,
                          double& normal, double& tangential);
void reconstruct_at_yface(const FaceVectorField& F, int i, int j,
                          double& normal, double& tangential);

}  // namespace crystal
