#include <doctest.h>

#include <cmath>
#include <random>

#include "crystal/grid.hpp"

using namespace crystal;

namespace {

ScalarField random_field(const GridSpec& g, std::mt19937_64& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  ScalarField f(g);
  for (double& v : f.values) v = dist(rng);
  return f;
}

FaceVectorField random_faces(const GridSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FaceVectorField F(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) F.fx(i, j) = dist(rng);
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) F.fy(i, j) = dist(rng);
  }
  return F;
}

}  // namespace

TEST_CASE("GridSpec rejects invalid shapes") {
  CHECK_THROWS_AS(GridSpec(1, 4, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(4, 1, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(4, 4, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec(4, 4, 1.0, -1.0), std::invalid_argument);
  const GridSpec g(3, 5, 0.5, 0.25);
  CHECK(g.cell_count() == 15);
  CHECK(g.domain_area() == doctest::Approx(1.5 * 1.25));
}

TEST_CASE("gradient of a constant vanishes") {
  const GridSpec g(5, 4, 0.3, 0.7);
  const FaceVectorField F = gradient(ScalarField(g, 2.75));
  for (double v : F.x) CHECK(v == 0.0);
  for (double v : F.y) CHECK(v == 0.0);
}

TEST_CASE("gradient of a linear ramp") {
  const GridSpec g(4, 4, 1.0, 1.0);
  ScalarField f(g);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) f.at(i, j) = static_cast<double>(i);
  }
  const FaceVectorField F = gradient(f);
  for (int j = 0; j < 4; ++j) {
    CHECK(F.fx(0, j) == 0.0);
    CHECK(F.fx(4, j) == 0.0);
    for (int i = 1; i < 4; ++i) CHECK(F.fx(i, j) == doctest::Approx(1.0));
  }
  for (double v : F.y) CHECK(v == 0.0);
}

TEST_CASE("gradient matches a hand stencil on a random 3x3 field") {
  const GridSpec g(3, 3, 0.5, 0.25);
  std::mt19937_64 rng(7);
  const ScalarField f = random_field(g, rng);
  const FaceVectorField F = gradient(f);
  for (int j = 0; j < 3; ++j) {
    for (int i = 1; i < 3; ++i) {
      const double expect = (f.values[j * 3 + i] - f.values[j * 3 + i - 1]) / 0.5;
      CHECK(F.fx(i, j) == doctest::Approx(expect).epsilon(1e-15));
    }
  }
  for (int j = 1; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      const double expect = (f.values[j * 3 + i] - f.values[(j - 1) * 3 + i]) / 0.25;
      CHECK(F.fy(i, j) == doctest::Approx(expect).epsilon(1e-15));
    }
  }
}

TEST_CASE("divergence of zero is zero; divergence of a ramp gradient by hand") {
  const GridSpec g(4, 4, 1.0, 1.0);
  const ScalarField z = divergence(FaceVectorField(g));
  for (double v : z.values) CHECK(v == 0.0);

  ScalarField ramp(g);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) ramp.at(i, j) = static_cast<double>(i);
  }
  const FaceVectorField F = gradient(ramp);
  const ScalarField d = divergence(F);
  // Hand stencil: flux enters and exits equally except at the walls, where
  // the mirror boundary forces a net value.
  for (int j = 0; j < 4; ++j) {
    CHECK(d.at(0, j) == doctest::Approx(1.0));   // (F(1)-0)/1
    CHECK(d.at(1, j) == doctest::Approx(0.0));
    CHECK(d.at(2, j) == doctest::Approx(0.0));
    CHECK(d.at(3, j) == doctest::Approx(-1.0));  // (0-F(3))/1
  }
}

TEST_CASE("divergence integrates to zero for admissible face fields") {
  std::mt19937_64 rng(11);
  for (const GridSpec& g : {GridSpec(3, 5, 0.4, 0.6), GridSpec(8, 8, 0.125, 0.125)}) {
    for (int trial = 0; trial < 10; ++trial) {
      const FaceVectorField F = random_faces(g, rng);
      CHECK(std::abs(integrate(divergence(F))) < 1e-13);
    }
  }
}

TEST_CASE("integrate: unit constant, zero, and a compensated-summation oracle") {
  const GridSpec g(10, 10, 0.1, 0.1);
  CHECK(integrate(ScalarField(g, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(integrate(ScalarField(g)) == 0.0);

  std::mt19937_64 rng(13);
  const ScalarField f = random_field(g, rng, 1e4);
  long double acc = 0.0L;
  for (double v : f.values) acc += static_cast<long double>(v);
  acc *= static_cast<long double>(g.cell_area());
  CHECK(integrate(f) == doctest::Approx(static_cast<double>(acc)).epsilon(1e-14));
}

TEST_CASE("lp_norm_faces: zero field, hand count on 2x2, p-validation") {
  const GridSpec g(2, 2, 0.5, 0.5);  // unit area
  CHECK(lp_norm_faces(FaceVectorField(g), 3.0) == 0.0);

  FaceVectorField F(g);
  // all interior faces = 1: two interior x-faces and two interior y-faces,
  // each of weight hx*hy = 1/4; total face weight 1.
  F.fx(1, 0) = F.fx(1, 1) = 1.0;
  F.fy(0, 1) = F.fy(1, 1) = 1.0;
  CHECK(lp_norm_faces(F, 2.0) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(lp_norm_faces(F, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lp_norm_faces(F, 0.5), std::invalid_argument);
}

TEST_CASE("squared l2 face norm equals the face inner product") {
  const GridSpec g(6, 5, 0.2, 0.3);
  std::mt19937_64 rng(17);
  const FaceVectorField F = random_faces(g, rng);
  const double n2 = lp_norm_faces(F, 2.0);
  CHECK(n2 * n2 == doctest::Approx(face_inner(F, F)).epsilon(1e-13));
}

TEST_CASE("summation by parts is exact") {
  std::mt19937_64 rng(19);
  for (const GridSpec& g : {GridSpec(3, 5, 0.4, 0.2), GridSpec(8, 8, 0.125, 0.125),
                            GridSpec(17, 9, 0.1, 0.3)}) {
    for (int trial = 0; trial < 25; ++trial) {
      const ScalarField phi = random_field(g, rng);
      const FaceVectorField F = random_faces(g, rng);
      const ScalarField divF = divergence(F);
      const double a = cell_inner(divF, phi);
      const double b = face_inner(F, gradient(phi));
      const double scale = std::abs(a) + std::abs(b) + 1e-300;
      CHECK(std::abs(a + b) / scale < 1e-13);
    }
  }
}

TEST_CASE("divergence of the gradient of a constant is exactly zero") {
  const GridSpec g(7, 3, 0.11, 0.29);
  const ScalarField d = divergence(gradient(ScalarField(g, 42.0)));
  for (double v : d.values) CHECK(v == 0.0);
}

TEST_CASE("field validation catches malformed data") {
  const GridSpec g(3, 3, 1.0, 1.0);
  ScalarField f(g);
  f.values[4] = std::nan("");
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);

  FaceVectorField F(g);
  F.fx(0, 1) = 1.0;  // boundary face must stay zero
  CHECK_THROWS_AS(F.validate(), std::invalid_argument);
}

TEST_CASE("cell_average and face reconstruction agree on a linear field") {
  const GridSpec g(5, 5, 0.2, 0.2);
  ScalarField f(g);
  for (int j = 0; j < 5; ++j) {
    for (int i = 0; i < 5; ++i) f.at(i, j) = 2.0 * g.xc(i) + 3.0 * g.yc(j);
  }
  const FaceVectorField F = gradient(f);
  const CellVectorField c = cell_average(F);
  // interior cells see the exact slope; wall cells see half of it in the
  // normal direction because of the mirror ghost
  CHECK(c.x[g.cell(2, 2)] == doctest::Approx(2.0));
  CHECK(c.y[g.cell(2, 2)] == doctest::Approx(3.0));
  CHECK(c.x[g.cell(0, 2)] == doctest::Approx(1.0));

  double n, t;
  reconstruct_at_xface(F, 2, 2, n, t);
  CHECK(n == doctest::Approx(2.0));
  CHECK(t == doctest::Approx(3.0));
  reconstruct_at_yface(F, 2, 2, n, t);
  CHECK(n == doctest::Approx(3.0));
  CHECK(t == doctest::Approx(2.0));
}
