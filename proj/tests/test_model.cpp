#include <doctest.h>

#include <cmath>
#include <random>

#include "crystal/model.hpp"

using namespace crystal;

namespace {

ModelParams make_params(double p, double beta, double eps, double q = 0.0) {
  ModelParams m;
  m.p = p;
  m.beta = beta;
  m.q = q;
  m.eps = eps;
  m.dt = eps;  // coupled
  return m;
}

}  // namespace

TEST_CASE("ModelParams validation") {
  CHECK_THROWS_WITH_AS(make_params(0.5, 0, 0.1).validate(),
                       "ModelParams: p must exceed 1", std::invalid_argument);
  CHECK_THROWS_AS(make_params(2, -1, 0.1).validate(), std::invalid_argument);
  ModelParams m = make_params(2, 0, 0.1);
  m.eps = 0.2;  // coupled mode requires eps == dt
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.eps_mode = EpsMode::fixed;
  CHECK_NOTHROW(m.validate());
  CHECK(m.with_dt(0.05).eps == 0.2);
  ModelParams c = make_params(2, 0, 0.1);
  CHECK(c.with_dt(0.05).eps == 0.05);
}

TEST_CASE("mobility_at: facet, q = 0, and hand-computed samples") {
  SymTensor2 I = mobility_at(0.0, 0.0, 5.0);
  CHECK(I.m11 == 1.0);
  CHECK(I.m12 == 0.0);
  CHECK(I.m22 == 1.0);

  SymTensor2 M0 = mobility_at(3.0, -4.0, 0.0);
  CHECK(M0.m11 == doctest::Approx(1.0));
  CHECK(M0.m12 == doctest::Approx(0.0));
  CHECK(M0.m22 == doctest::Approx(1.0));

  // gradient along x with q = 1: diag(1/2, 1)
  SymTensor2 M1 = mobility_at(1.0, 0.0, 1.0);
  CHECK(M1.m11 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(M1.m12 == doctest::Approx(0.0));
  CHECK(M1.m22 == doctest::Approx(1.0));

  // diagonal gradient with q = 1: eigenpairs (1/(1+sqrt 2), (1,1)) and (1, (1,-1))
  SymTensor2 M2 = mobility_at(1.0, 1.0, 1.0);
  const double lam = 1.0 / (1.0 + std::sqrt(2.0));
  CHECK(M2.m11 + M2.m12 == doctest::Approx(lam).epsilon(1e-14));    // M (1,1) = lam (1,1)
  CHECK(M2.m12 + M2.m22 == doctest::Approx(lam).epsilon(1e-14));
  CHECK(M2.m11 - M2.m12 == doctest::Approx(1.0).epsilon(1e-14));    // M (1,-1) = (1,-1)
}

TEST_CASE("mobility spectral sandwich: eigenvalues are exactly {1/(1+qg), 1}") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> logmag(-8.0, 8.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 20000; ++trial) {
    const double mag = std::pow(10.0, logmag(rng));
    const double angle = 2.0 * M_PI * unit(rng);
    const double gx = mag * std::cos(angle), gy = mag * std::sin(angle);
    const double q = std::pow(10.0, logmag(rng));
    const SymTensor2 M = mobility_at(gx, gy, q);
    const double lam = 1.0 / (1.0 + q * std::hypot(gx, gy));
    CHECK(M.m11 + M.m22 == doctest::Approx(1.0 + lam).epsilon(1e-12));
    CHECK(M.m11 * M.m22 - M.m12 * M.m12 == doctest::Approx(lam).epsilon(1e-11));
  }
}

TEST_CASE("mobility tends to the identity on the facet") {
  for (double mag : {1e-1, 1e-3, 1e-6, 1e-9, 1e-12}) {
    const SymTensor2 M = mobility_at(mag * 0.6, mag * 0.8, 2.0);
    const double dev = std::max({std::abs(M.m11 - 1.0), std::abs(M.m12),
                                 std::abs(M.m22 - 1.0)});
    CHECK(dev <= 2.0 * mag + 1e-300);  // entries differ from I by O(q |g|)
  }
}

TEST_CASE("mobility_quadratic_form: identity, tight lower bound, sampled range") {
  CHECK(mobility_quadratic_form(SymTensor2{}, 3.0, 4.0) == doctest::Approx(25.0));

  const SymTensor2 M = mobility_at(1.0, 0.0, 1.0);
  CHECK(mobility_quadratic_form(M, 1.0, 0.0) == doctest::Approx(0.5));  // = 1/(1+1)

  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int trial = 0; trial < 20000; ++trial) {
    const double gx = dist(rng), gy = dist(rng), x0 = dist(rng), x1 = dist(rng);
    const double q = std::abs(dist(rng));
    const double v = mobility_quadratic_form(mobility_at(gx, gy, q), x0, x1);
    const double xi2 = x0 * x0 + x1 * x1;
    const double lower = xi2 / (1.0 + q * std::hypot(gx, gy));
    CHECK(v >= lower - 1e-12 * (xi2 + 1.0));
    CHECK(v <= xi2 + 1e-12 * (xi2 + 1.0));
  }
}

TEST_CASE("flux_coeff: closed-form samples") {
  const ModelParams linear = make_params(2.0, 0.0, 0.7);
  for (double s : {0.0, 0.3, 5.0, 1e8}) {
    CHECK(flux_coeff(s, linear) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(flux_coeff(0.0, make_params(2.0, 1.0, 0.25)) == doctest::Approx(3.0));
  CHECK(flux_coeff(0.0, make_params(4.0, 0.0, 1.0)) == doctest::Approx(1.0));
  // strictly positive, finite for s >= 0
  const ModelParams m = make_params(1.5, 2.0, 1e-6);
  for (double s : {0.0, 1e-12, 1.0, 1e12}) {
    const double f = flux_coeff(s, m);
    CHECK(f > 0.0);
    CHECK(std::isfinite(f));
  }
}

TEST_CASE("flux map is monotone") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (double p : {1.2, 2.0, 3.0}) {
    for (double beta : {0.0, 1.0, 5.0}) {
      const ModelParams m = make_params(p, beta, 0.01);
      for (int trial = 0; trial < 5000; ++trial) {
        const double x0 = dist(rng), x1 = dist(rng), y0 = dist(rng), y1 = dist(rng);
        const double fx = flux_coeff(x0 * x0 + x1 * x1, m);
        const double fy = flux_coeff(y0 * y0 + y1 * y1, m);
        const double dot =
            (fx * x0 - fy * y0) * (x0 - y0) + (fx * x1 - fy * y1) * (x1 - y1);
        CHECK(dot >= -1e-12 * (fx * (x0 * x0 + x1 * x1) + fy * (y0 * y0 + y1 * y1)));
      }
    }
  }
}

TEST_CASE("energy_phi at constant fields") {
  const GridSpec g(10, 10, 0.1, 0.1);  // unit area
  const ScalarField u(g, 3.0);
  CHECK(energy_phi(u, make_params(2.0, 0.0, 1.0)) ==
        doctest::Approx(0.5).epsilon(1e-13));
  CHECK(energy_phi(u, make_params(2.0, 1.0, 0.04)) ==
        doctest::Approx(0.22).epsilon(1e-13));
}

TEST_CASE("energy_phi is minimized by constants") {
  const GridSpec g(8, 8, 0.125, 0.125);
  const ModelParams m = make_params(3.0, 1.0, 0.05);
  const double floor =
      g.domain_area() * (std::pow(m.eps, 1.5) / 3.0 + std::sqrt(m.eps));
  CHECK(energy_phi(ScalarField(g, -7.0), m) == doctest::Approx(floor).epsilon(1e-13));
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    ScalarField u(g);
    for (double& v : u.values) v = dist(rng);
    CHECK(energy_phi(u, m) >= floor - 1e-12 * floor);
  }
}

TEST_CASE("energy_G: constants, frozen ramp value, h-refinement consistency") {
  const ModelParams m = make_params(2.0, 1.0, 1e-3);
  {
    const GridSpec g(6, 6, 0.25, 0.25);
    CHECK(energy_G(ScalarField(g, 9.0), m) == 0.0);
  }
  {
    // slope-1 ramp on the unit square, 4x4: twelve interior x-faces carry
    // |r| = 1 with weight 1/16 each, so G = (1/2 + 1) * 12/16 = 9/8.
    const GridSpec g(4, 4, 0.25, 0.25);
    ScalarField f(g);
    for (int j = 0; j < 4; ++j) {
      for (int i = 0; i < 4; ++i) f.at(i, j) = g.xc(i);
    }
    double hand = 0.0;
    for (int j = 0; j < 4; ++j) {
      for (int i = 1; i < 4; ++i) hand += (0.5 + 1.0) * 0.0625;
    }
    CHECK(hand == doctest::Approx(9.0 / 8.0));
    CHECK(energy_G(f, m) == doctest::Approx(hand).epsilon(1e-13));
  }
  // with refinement the wall deficit vanishes and G tends to 3/2
  double prev_err = 1e9;
  for (int n : {8, 16, 64}) {
    const GridSpec g(n, n, 1.0 / n, 1.0 / n);
    ScalarField f(g);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) f.at(i, j) = g.xc(i);
    }
    const double err = std::abs(energy_G(f, m) - 1.5);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.03);
}

TEST_CASE("energy_G vs energy_phi comparisons") {
  const GridSpec g(8, 8, 0.125, 0.125);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int trial = 0; trial < 40; ++trial) {
    ScalarField u(g);
    for (double& v : u.values) v = dist(rng);
    for (double p : {2.0, 3.0}) {
      for (double eps : {1.0, 0.1, 0.01}) {
        // beta = 0: G <= Phi_eps directly
        const ModelParams m0 = make_params(p, 0.0, eps);
        CHECK(energy_G(u, m0) <= energy_phi(u, m0) + 1e-12);
        // general beta: G <= Phi_eps + |Omega| e(0) (the facet offset)
        const ModelParams m1 = make_params(p, 1.0, eps);
        const double offset = g.domain_area() * face_energy_density(0.0, m1);
        CHECK(energy_G(u, m1) <= energy_phi(u, m1) + offset + 1e-12);
      }
    }
  }
}

TEST_CASE("energy_phi approaches energy_G as eps shrinks") {
  const GridSpec g(8, 8, 0.125, 0.125);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField u(g);
  for (double& v : u.values) v = dist(rng);
  double prev_gap = 1e99;
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-10}) {
    const ModelParams m = make_params(3.0, 1.0, eps);
    const double gap = std::abs(energy_phi(u, m) - energy_G(u, m));
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-4);
}

TEST_CASE("dissipation_integral: zero, q = 0 reduction, trivial upper bound") {
  const GridSpec g(9, 7, 0.2, 0.2);
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField v(g), u(g);
  for (double& x : v.values) x = dist(rng);
  for (double& x : u.values) x = dist(rng);

  CHECK(dissipation_integral(ScalarField(g, 4.0), u, make_params(2, 0, 0.1, 3.0)) == 0.0);

  const double q0 = dissipation_integral(v, u, make_params(2, 0, 0.1, 0.0));
  const double n2 = lp_norm_faces(gradient(v), 2.0);
  CHECK(q0 == doctest::Approx(n2 * n2).epsilon(1e-13));

  const double weighted = dissipation_integral(v, u, make_params(2, 0, 0.1, 5.0));
  CHECK(weighted >= 0.0);
  CHECK(weighted <= q0 + 1e-12);
}

TEST_CASE("build_mobility: identity on facets and spectral bounds per cell") {
  const GridSpec g(6, 6, 0.5, 0.5);
  const MobilityField Mc = build_mobility(ScalarField(g, 1.23), 4.0);
  for (const SymTensor2& m : Mc.cells) {
    CHECK(m.m11 == 1.0);
    CHECK(m.m12 == 0.0);
    CHECK(m.m22 == 1.0);
  }

  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  ScalarField u(g);
  for (double& x : u.values) x = dist(rng);
  const MobilityField M = build_mobility(u, 2.5);
  for (int c = 0; c < g.cell_count(); ++c) {
    const SymTensor2& m = M.cells[c];
    const double lam = 1.0 / (1.0 + 2.5 * M.gradient_magnitude[c]);
    CHECK(m.m11 + m.m22 == doctest::Approx(1.0 + lam).epsilon(1e-12));
    CHECK(m.m11 * m.m22 - m.m12 * m.m12 == doctest::Approx(lam).epsilon(1e-11));
  }
}
