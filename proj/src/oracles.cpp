#include "crystal/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace crystal {

namespace {

constexpr double kRelTol = 1e-12;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-sample counter RNG: several independent lanes per index.
struct SampleRng {
  std::uint64_t seed;
  long long index;

  double unit(int lane) const {
    const std::uint64_t bits =
        splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) * 0x632be59bd9b4e019ULL +
                                     static_cast<std::uint64_t>(lane)));
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  /// Log-uniform magnitude with random sign.
  double signed_mag(int lane, double lo, double hi) const {
    const double m = std::exp(std::log(lo) + unit(lane) * (std::log(hi) - std::log(lo)));
    return unit(lane + 100) < 0.5 ? -m : m;
  }

  double positive_mag(int lane, double lo, double hi) const {
    return std::exp(std::log(lo) + unit(lane) * (std::log(hi) - std::log(lo)));
  }
};

/// lhs >= rhs within a relative tolerance against the magnitude scale.
bool holds(double lhs, double rhs, double extra_scale = 0.0) {
  const double scale = std::abs(lhs) + std::abs(rhs) + extra_scale;
  return rhs - lhs <= kRelTol * scale;
}

double rel_violation(double lhs, double rhs, double extra_scale = 0.0) {
  const double scale = std::abs(lhs) + std::abs(rhs) + extra_scale + 1e-300;
  return (rhs - lhs) / scale;
}

/// |z|^(p-2) z, with the value 0 at z = 0 (the limit for p < 2 and the
/// subgradient selection at the origin).
void p_flux(double z0, double z1, double p, double& out0, double& out1) {
  const double n = std::hypot(z0, z1);
  if (n == 0.0) {
    out0 = out1 = 0.0;
    return;
  }
  const double f = std::pow(n, p - 2.0);
  out0 = f * z0;
  out1 = f * z1;
}

struct IncreasingEval {
  double f;  // f(s)
  double F;  // antiderivative at s
};

IncreasingEval eval_increasing(IncreasingFn fn, double s, const ModelParams& params,
                               double alpha) {
  switch (fn) {
    case IncreasingFn::identity:
      return {s, 0.5 * s * s};
    case IncreasingFn::cubic:
      return {s * s * s, 0.25 * s * s * s * s};
    case IncreasingFn::arctangent:
      return {std::atan(s), s * std::atan(s) - 0.5 * std::log1p(s * s)};
    case IncreasingFn::shifted_power: {
      // (s + eps)^alpha on s >= 0, alpha > 0
      const double t = s + params.eps;
      return {std::pow(t, alpha), std::pow(t, alpha + 1.0) / (alpha + 1.0)};
    }
    case IncreasingFn::flux_derivative:
      // F(r^2) r, the derivative of the per-face energy density
      return {flux_coeff(s * s, params) * s, face_energy_density(s, params)};
  }
  throw std::logic_error("unknown increasing function");
}

}  // namespace

void SampleConfig::validate() const {
  if (count < 1) throw std::invalid_argument("SampleConfig: count must be >= 1");
  if (!(mag_min > 0.0) || !(mag_max >= mag_min)) {
    throw std::invalid_argument("SampleConfig: magnitude range must be positive");
  }
}

bool oracle_power_convexity(double x0, double x1, double y0, double y1, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("oracle_power_convexity: p must exceed 1");
  double f0, f1;
  p_flux(x0, x1, p, f0, f1);
  const double lhs = f0 * (x0 - y0) + f1 * (x1 - y1);
  const double xp = std::pow(std::hypot(x0, x1), p);
  const double yp = std::pow(std::hypot(y0, y1), p);
  return holds(lhs, (xp - yp) / p, xp + yp);
}

bool oracle_young(double a, double b, double eps, double p) {
  if (!(a > 0.0 && b > 0.0 && eps > 0.0)) {
    throw std::invalid_argument("oracle_young: a, b, eps must be positive");
  }
  if (!(p > 1.0)) throw std::invalid_argument("oracle_young: p must exceed 1");
  const double q = p / (p - 1.0);
  const double rhs = eps * std::pow(a, p) + std::pow(eps, -q / p) * std::pow(b, q);
  return holds(rhs, a * b);
}

bool oracle_increasing_antideriv(IncreasingFn fn, double s, double t,
                                 const ModelParams& params, double alpha) {
  const IncreasingEval at_s = eval_increasing(fn, s, params, alpha);
  const IncreasingEval at_t = eval_increasing(fn, t, params, alpha);
  const double lhs = at_s.f * (s - t);
  const double rhs = at_s.F - at_t.F;
  return holds(lhs, rhs, std::abs(at_s.F) + std::abs(at_t.F));
}

bool oracle_oden_high_p(double x0, double x1, double y0, double y1, double p) {
  if (!(p > 2.0)) throw std::invalid_argument("oracle_oden_high_p: p must exceed 2");
  double fx0, fx1, fy0, fy1;
  p_flux(x0, x1, p, fx0, fx1);
  p_flux(y0, y1, p, fy0, fy1);
  const double d0 = x0 - y0, d1 = x1 - y1;
  const double lhs = (fx0 - fy0) * d0 + (fx1 - fy1) * d1;
  const double rhs = std::pow(2.0, 1.0 - p) * std::pow(std::hypot(d0, d1), p);
  const double scale = std::pow(std::hypot(x0, x1), p) + std::pow(std::hypot(y0, y1), p);
  return holds(lhs, rhs, scale);
}

bool oracle_oden_low_p(double x0, double x1, double y0, double y1, double p) {
  if (!(p > 1.0 && p <= 2.0)) {
    throw std::invalid_argument("oracle_oden_low_p: need 1 < p <= 2");
  }
  double fx0, fx1, fy0, fy1;
  p_flux(x0, x1, p, fx0, fx1);
  p_flux(y0, y1, p, fy0, fy1);
  const double d0 = x0 - y0, d1 = x1 - y1;
  const double mono = (fx0 - fy0) * d0 + (fx1 - fy1) * d1;
  const double weight =
      std::pow(1.0 + x0 * x0 + x1 * x1 + y0 * y0 + y1 * y1, 0.5 * (2.0 - p));
  const double lhs = weight * mono;
  const double rhs = (p - 1.0) * (d0 * d0 + d1 * d1);
  return holds(lhs, rhs);
}

bool oracle_flux_monotone(double xi0, double xi1, double eta0, double eta1,
                          const ModelParams& params) {
  const double fxi = flux_coeff(xi0 * xi0 + xi1 * xi1, params);
  const double feta = flux_coeff(eta0 * eta0 + eta1 * eta1, params);
  const double d0 = xi0 - eta0, d1 = xi1 - eta1;
  const double lhs = (fxi * xi0 - feta * eta0) * d0 + (fxi * xi1 - feta * eta1) * d1;
  const double scale = fxi * (xi0 * xi0 + xi1 * xi1) + feta * (eta0 * eta0 + eta1 * eta1);
  return holds(lhs, 0.0, scale);
}

bool oracle_mobility_bounds(double gx, double gy, double q, double xi0, double xi1) {
  const SymTensor2 M = mobility_at(gx, gy, q);
  const double quad = mobility_quadratic_form(M, xi0, xi1);
  const double xi2 = xi0 * xi0 + xi1 * xi1;
  const double lower = xi2 / (1.0 + q * std::hypot(gx, gy));
  return holds(quad, lower, xi2) && holds(xi2, quad);
}

namespace {

template <typename Fn>
OracleResult sweep(const std::string& name, const SampleConfig& cfg, Fn&& sample) {
  cfg.validate();
  OracleResult result;
  result.name = name;
  result.samples = cfg.count;
  for (long long i = 0; i < cfg.count; ++i) {
    Counterexample ce;
    ce.index = i;
    if (!sample(SampleRng{cfg.seed, i}, ce)) {
      ++result.failures;
      if (ce.violation > result.worst_violation) result.worst_violation = ce.violation;
      if (result.examples.size() < 10) result.examples.push_back(ce);
    }
  }
  return result;
}

// Edge lanes: every 32nd sample pins y = x, every 33rd pins y = 0, so the
// equality cases are always in the sweep.
void edge_adjust(const SampleRng& rng, double& y0, double& y1, double x0, double x1) {
  if (rng.index % 32 == 0) {
    y0 = x0;
    y1 = x1;
  } else if (rng.index % 33 == 0) {
    y0 = 0.0;
    y1 = 0.0;
  }
}

}  // namespace

OracleResult run_power_convexity(const SampleConfig& cfg) {
  static constexpr double ps[] = {1.5, 2.0, 3.0, 4.0};
  return sweep("power_convexity", cfg, [&](const SampleRng& rng, Counterexample& ce) {
    const double p = ps[rng.index % 4];
    double x0 = rng.signed_mag(0, cfg.mag_min, cfg.mag_max);
    double x1 = rng.signed_mag(1, cfg.mag_min, cfg.mag_max);
    double y0 = rng.signed_mag(2, cfg.mag_min, cfg.mag_max);
    double y1 = rng.signed_mag(3, cfg.mag_min, cfg.mag_max);
    edge_adjust(rng, y0, y1, x0, x1);
    ce.args = {x0, x1, y0, y1, p, 0.0};
    if (oracle_power_convexity(x0, x1, y0, y1, p)) return true;
    double f0, f1;
    p_flux(x0, x1, p, f0, f1);
    const double lhs = f0 * (x0 - y0) + f1 * (x1 - y1);
    const double rhs =
        (std::pow(std::hypot(x0, x1), p) - std::pow(std::hypot(y0, y1), p)) / p;
    ce.violation = rel_violation(lhs, rhs);
    return false;
  });
}

OracleResult run_young(const SampleConfig& cfg) {
  static constexpr double ps[] = {1.1, 1.25, 2.0, 3.0, 8.0};
  return sweep("young", cfg, [&](const SampleRng& rng, Counterexample& ce) {
    const double p = ps[rng.index % 5];
    const double a = rng.positive_mag(0, cfg.mag_min, cfg.mag_max);
    double b = rng.positive_mag(1, cfg.mag_min, cfg.mag_max);
    const double eps = rng.positive_mag(2, cfg.mag_min, cfg.mag_max);
    if (rng.index % 32 == 0) {
      // equality family: b^q = eps^q a^p  <=>  b = eps a^(p-1)
      b = eps * std::pow(a, p - 1.0);
      if (!std::isfinite(b) || b <= 0.0) b = 1.0;
    }
    ce.args = {a, b, eps, p, 0.0, 0.0};
    if (oracle_young(a, b, eps, p)) return true;
    const double q = p / (p - 1.0);
    const double rhs = eps * std::pow(a, p) + std::pow(eps, -q / p) * std::pow(b, q);
    ce.violation = rel_violation(rhs, a * b);
    return false;
  });
}

OracleResult run_increasing_antideriv(const SampleConfig& cfg) {
  static constexpr IncreasingFn fns[] = {
      IncreasingFn::identity, IncreasingFn::cubic, IncreasingFn::arctangent,
      IncreasingFn::shifted_power, IncreasingFn::flux_derivative};
  static constexpr double ps[] = {1.5, 2.0, 3.0};
  static constexpr double alphas[] = {0.5, 1.0, 2.5};
  return sweep("increasing_antideriv", cfg, [&](const SampleRng& rng, Counterexample& ce) {
    const IncreasingFn fn = fns[rng.index % 5];
    ModelParams params;
    params.p = ps[rng.index % 3];
    params.beta = (rng.index % 2) ? 1.0 : 0.0;
    params.eps = rng.positive_mag(4, 1e-8, 1.0);
    params.dt = params.eps;
    const double alpha = alphas[rng.index % 3];
    const bool nonnegative_domain = fn == IncreasingFn::shifted_power;
    double s = nonnegative_domain ? rng.positive_mag(0, cfg.mag_min, cfg.mag_max)
                                  : rng.signed_mag(0, cfg.mag_min, cfg.mag_max);
    double t = nonnegative_domain ? rng.positive_mag(1, cfg.mag_min, cfg.mag_max)
                                  : rng.signed_mag(1, cfg.mag_min, cfg.mag_max);
    if (rng.index % 32 == 0) t = s;
    ce.args = {static_cast<double>(rng.index % 5), s, t, params.p, params.eps, alpha};
    if (oracle_increasing_antideriv(fn, s, t, params, alpha)) return true;
    const IncreasingEval es = eval_increasing(fn, s, params, alpha);
    const IncreasingEval et = eval_increasing(fn, t, params, alpha);
    ce.violation = rel_violation(es.f * (s - t), es.F - et.F);
    return false;
  });
}

OracleResult run_oden_high_p(const SampleConfig& cfg) {
  static constexpr double ps[] = {2.5, 3.0, 4.0};
  return sweep("oden_high_p", cfg, [&](const SampleRng& rng, Counterexample& ce) {
    const double p = ps[rng.index % 3];
    double x0 = rng.signed_mag(0, cfg.mag_min, cfg.mag_max);
    double x1 = rng.signed_mag(1, cfg.mag_min, cfg.mag_max);
    double y0 = rng.signed_mag(2, cfg.mag_min, cfg.mag_max);
    double y1 = rng.signed_mag(3, cfg.mag_min, cfg.mag_max);
    edge_adjust(rng, y0, y1, x0, x1);
    ce.args = {x0, x1, y0, y1, p, 0.0};
    if (oracle_oden_high_p(x0, x1, y0, y1, p)) return true;
    ce.violation = 1.0;
    return false;
  });
}

OracleResult run_oden_low_p(const SampleConfig& cfg) {
  static constexpr double ps[] = {1.2, 1.5, 1.9, 2.0};
  return sweep("oden_low_p", cfg, [&](const SampleRng& rng, Counterexample& ce) {
    const double p = ps[rng.index % 4];
    // The (1+|x|^2+|y|^2) weight overflows doubles beyond ~1e150; stay within.
    const double hi = std::min(cfg.mag_max, 1e60);
    double x0 = rng.signed_mag(0, cfg.mag_min, hi);
    double x1 = rng.signed_mag(1, cfg.mag_min, hi);
    double y0 = rng.signed_mag(2, cfg.mag_min, hi);
    double y1 = rng.signed_mag(3, cfg.mag_min, hi);
    edge_adjust(rng, y0, y1, x0, x1);
    ce.args = {x0, x1, y0, y1, p, 0.0};
    if (oracle_oden_low_p(x0, x1, y0, y1, p)) return true;
    ce.violation = 1.0;
    return false;
  });
}

OracleResult run_flux_monotone(const SampleConfig& cfg) {
  static constexpr double ps[] = {1.2, 2.0, 3.0};
  static constexpr double betas[] = {0.0, 1.0, 5.0};
  return sweep("flux_monotone", cfg, [&](const SampleRng& rng, Counterexample& ce) {
    ModelParams params;
    params.p = ps[rng.index % 3];
    params.beta = betas[(rng.index / 3) % 3];
    params.eps = rng.positive_mag(4, 1e-8, 1.0);
    params.dt = params.eps;
    double xi0 = rng.signed_mag(0, cfg.mag_min, cfg.mag_max);
    double xi1 = rng.signed_mag(1, cfg.mag_min, cfg.mag_max);
    double eta0 = rng.signed_mag(2, cfg.mag_min, cfg.mag_max);
    double eta1 = rng.signed_mag(3, cfg.mag_min, cfg.mag_max);
    edge_adjust(rng, eta0, eta1, xi0, xi1);
    ce.args = {xi0, xi1, eta0, eta1, params.p, params.beta};
    if (oracle_flux_monotone(xi0, xi1, eta0, eta1, params)) return true;
    ce.violation = 1.0;
    return false;
  });
}

OracleResult run_mobility_bounds(const SampleConfig& cfg) {
  return sweep("mobility_bounds", cfg, [&](const SampleRng& rng, Counterexample& ce) {
    double gx = rng.signed_mag(0, cfg.mag_min, cfg.mag_max);
    double gy = rng.signed_mag(1, cfg.mag_min, cfg.mag_max);
    double q = rng.positive_mag(2, cfg.mag_min, cfg.mag_max);
    double xi0 = rng.signed_mag(3, cfg.mag_min, cfg.mag_max);
    double xi1 = rng.signed_mag(4, cfg.mag_min, cfg.mag_max);
    if (rng.index % 8 == 0) q = 0.0;
    if (rng.index % 16 == 0) {
      gx = 0.0;
      gy = 0.0;
    }
    if (rng.index % 9 == 0) {
      // aligned case: equality on the lower bound
      xi0 = gx;
      xi1 = gy;
    }
    ce.args = {gx, gy, q, xi0, xi1, 0.0};
    if (oracle_mobility_bounds(gx, gy, q, xi0, xi1)) return true;
    const SymTensor2 M = mobility_at(gx, gy, q);
    const double quad = mobility_quadratic_form(M, xi0, xi1);
    const double xi2 = xi0 * xi0 + xi1 * xi1;
    const double lower = xi2 / (1.0 + q * std::hypot(gx, gy));
    ce.violation = std::max(rel_violation(quad, lower), rel_violation(xi2, quad));
    return false;
  });
}

std::vector<OracleResult> run_all_oracles(const SampleConfig& cfg) {
  return {run_power_convexity(cfg), run_young(cfg),       run_increasing_antideriv(cfg),
          run_oden_high_p(cfg),     run_oden_low_p(cfg),  run_flux_monotone(cfg),
          run_mobility_bounds(cfg)};
}

}  // namespace crystal
