#pragma once

// Test-only dense linear algebra, independent of the solver path it checks:
// operators are assembled column by column and solved by Gaussian
// elimination with partial pivoting.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crystal/grid.hpp"
#include "crystal/solvers.hpp"

namespace crystal::testing {

struct DenseMatrix {
  int n = 0;
  std::vector<double> a;  // row-major
  double& at(int r, int c) { return a[r * n + c]; }
  double at(int r, int c) const { return a[r * n + c]; }
};

inline DenseMatrix assemble(const LinearOperator& A) {
  const GridSpec& g = A.grid();
  const int n = g.cell_count();
  DenseMatrix M;
  M.n = n;
  M.a.assign(static_cast<std::size_t>(n) * n, 0.0);
  ScalarField e(g);
  for (int c = 0; c < n; ++c) {
    e.values.assign(n, 0.0);
    e.values[c] = 1.0;
    const ScalarField col = A.apply(e);
    for (int r = 0; r < n; ++r) M.at(r, c) = col.values[r];
  }
  return M;
}

inline std::vector<double> gauss_solve(DenseMatrix M, std::vector<double> b) {
  const int n = M.n;
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("gauss_solve: size");
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int r = k + 1; r < n; ++r) {
      if (std::abs(M.at(r, k)) > std::abs(M.at(pivot, k))) pivot = r;
    }
    if (M.at(pivot, k) == 0.0) throw std::runtime_error("gauss_solve: singular matrix");
    if (pivot != k) {
      for (int c = k; c < n; ++c) std::swap(M.at(pivot, c), M.at(k, c));
      std::swap(b[pivot], b[k]);
    }
    for (int r = k + 1; r < n; ++r) {
      const double f = M.at(r, k) / M.at(k, k);
      if (f == 0.0) continue;
      for (int c = k; c < n; ++c) M.at(r, c) -= f * M.at(k, c);
      b[r] -= f * b[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= M.at(r, c) * x[c];
    x[r] = s / M.at(r, r);
  }
  return x;
}

/// Dense monolithic solve of the coupled linear step
///   u/dt + A_v v = u_prev/dt,   A_u u - v = 0
/// for given (frozen) operators; returns (u, v).
inline std::pair<std::vector<double>, std::vector<double>> coupled_block_solve(
    const LinearOperator& A_u, const LinearOperator& A_v, double dt,
    const std::vector<double>& u_prev) {
  const GridSpec& g = A_u.grid();
  const int n = g.cell_count();
  const DenseMatrix Du = assemble(A_u);
  const DenseMatrix Dv = assemble(A_v);

  DenseMatrix B;
  B.n = 2 * n;
  B.a.assign(static_cast<std::size_t>(2 * n) * 2 * n, 0.0);
  std::vector<double> rhs(2 * n, 0.0);
  for (int r = 0; r < n; ++r) {
    B.at(r, r) = 1.0 / dt;
    for (int c = 0; c < n; ++c) B.at(r, n + c) = Dv.at(r, c);
    rhs[r] = u_prev[r] / dt;
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) B.at(n + r, c) = Du.at(r, c);
    B.at(n + r, n + r) -= 1.0;
  }
  const std::vector<double> sol = gauss_solve(std::move(B), rhs);
  return {std::vector<double>(sol.begin(), sol.begin() + n),
          std::vector<double>(sol.begin() + n, sol.end())};
}

}  // namespace crystal::testing
