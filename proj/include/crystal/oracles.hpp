#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "crystal/model.hpp"

namespace crystal {

/// Sampling plan for the inequality suites. Magnitudes are drawn
/// log-uniformly over [mag_min, mag_max] so both the facet regime and the
/// strongly degenerate regime are exercised; samples are generated from a
/// per-index counter RNG, so results do not depend on evaluation order.
struct SampleConfig {
  long long count = 1'000'000;
  std::uint64_t seed = 1337;
  double mag_min = 1e-8;
  double mag_max = 1e8;

  void validate() const;
};

struct Counterexample {
  long long index = 0;
  std::array<double, 6> args{};  // oracle-specific payload
  double violation = 0.0;        // relative violated amount
};

struct OracleResult {
  std::string name;
  long long samples = 0;
  long long failures = 0;
  double worst_violation = 0.0;
  std::vector<Counterexample> examples;  // first few failures
  bool passed() const { return failures == 0; }
};

/// Pointwise checks. Each returns true when the inequality holds within a
/// relative tolerance of 1e-12 against the magnitude of its terms.
/// |x|^(p-2) x at x = 0 is taken as 0 (the limit) throughout.

/// |x|^(p-2) x . (x - y) >= (1/p)(|x|^p - |y|^p), p > 1.
bool oracle_power_convexity(double x0, double x1, double y0, double y1, double p);

/// a b <= eps a^p + eps^(-q/p) b^q with 1/p + 1/q = 1; a, b, eps > 0.
bool oracle_young(double a, double b, double eps, double p);

/// f(s)(s - t) >= F(s) - F(t) for increasing f with antiderivative F.
/// The catalog covers shifted power laws on s >= 0 and the per-face flux
/// derivative r -> F(r^2) r with its closed-form antiderivative.
enum class IncreasingFn { identity, cubic, arctangent, shifted_power, flux_derivative };
bool oracle_increasing_antideriv(IncreasingFn f, double s, double t,
                                 const ModelParams& params, double alpha);

/// (|x|^(p-2) x - |y|^(p-2) y) . (x - y) >= 2^(1-p) |x - y|^p, p > 2.
bool oracle_oden_high_p(double x0, double x1, double y0, double y1, double p);

/// (1+|x|^2+|y|^2)^((2-p)/2) ((|x|^(p-2)x - |y|^(p-2)y).(x-y)) >= (p-1)|x-y|^2,
/// 1 < p <= 2.
bool oracle_oden_low_p(double x0, double x1, double y0, double y1, double p);

/// (F(|xi|^2) xi - F(|eta|^2) eta) . (xi - eta) >= 0.
bool oracle_flux_monotone(double xi0, double xi1, double eta0, double eta1,
                          const ModelParams& params);

/// |xi|^2 / (1 + q |g|) <= xi^T M(g) xi <= |xi|^2.
bool oracle_mobility_bounds(double gx, double gy, double q, double xi0, double xi1);

/// Full randomized sweeps, one result per oracle.
OracleResult run_power_convexity(const SampleConfig& cfg);
OracleResult run_young(const SampleConfig& cfg);
OracleResult run_increasing_antideriv(const SampleConfig& cfg);
OracleResult run_oden_high_p(const SampleConfig& cfg);
OracleResult run_oden_low_p(const SampleConfig& cfg);
OracleResult run_flux_monotone(const SampleConfig& cfg);
OracleResult run_mobility_bounds(const SampleConfig& cfg);

std::vector<OracleResult> run_all_oracles(const SampleConfig& cfg);

}  // namespace crystal
