#include "crystal/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

namespace crystal {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw ConfigError(what + ": not a finite number: '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw ConfigError(what + ": not an integer: '" + s + "'");
  }
  return v;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string InitialSpec::to_string() const {
  switch (kind) {
    case Kind::constant:
      return "constant(" + fmt(c) + ")";
    case Kind::gaussian_bump:
      return "gaussian-bump(" + fmt(x0) + "," + fmt(y0) + "," + fmt(sigma) + "," +
             fmt(amp) + ")";
    case Kind::cone:
      return "cone(" + fmt(x0) + "," + fmt(y0) + "," + fmt(slope) + ")";
    case Kind::random_smooth:
      return "random-smooth(" + std::to_string(seed) + "," + std::to_string(cutoff) + ")";
    case Kind::file:
      return "file(" + path + ")";
  }
  return {};
}

InitialSpec InitialSpec::parse(const std::string& text) {
  const std::string s = trim(text);
  const std::size_t open = s.find('(');
  if (open == std::string::npos || s.back() != ')') {
    throw ConfigError("initial: expected name(args), got '" + s + "'");
  }
  const std::string name = trim(s.substr(0, open));
  const std::string inner = s.substr(open + 1, s.size() - open - 2);
  std::vector<std::string> args;
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) args.push_back(trim(item));

  auto expect = [&](std::size_t n) {
    if (args.size() != n) {
      throw ConfigError("initial: " + name + " takes " + std::to_string(n) +
                        " argument(s)");
    }
  };
  InitialSpec spec;
  if (name == "constant") {
    expect(1);
    spec.kind = Kind::constant;
    spec.c = parse_double(args[0], "initial constant");
  } else if (name == "gaussian-bump") {
    expect(4);
    spec.kind = Kind::gaussian_bump;
    spec.x0 = parse_double(args[0], "initial x0");
    spec.y0 = parse_double(args[1], "initial y0");
    spec.sigma = parse_double(args[2], "initial sigma");
    spec.amp = parse_double(args[3], "initial amp");
    if (!(spec.sigma > 0.0)) throw ConfigError("initial: sigma must be positive");
  } else if (name == "cone") {
    expect(3);
    spec.kind = Kind::cone;
    spec.x0 = parse_double(args[0], "initial x0");
    spec.y0 = parse_double(args[1], "initial y0");
    spec.slope = parse_double(args[2], "initial slope");
  } else if (name == "random-smooth") {
    expect(2);
    spec.kind = Kind::random_smooth;
    spec.seed = static_cast<std::uint64_t>(parse_int(args[0], "initial seed"));
    spec.cutoff = static_cast<int>(parse_int(args[1], "initial cutoff"));
    if (spec.cutoff < 1) throw ConfigError("initial: cutoff must be >= 1");
  } else if (name == "file") {
    expect(1);
    spec.kind = Kind::file;
    spec.path = args[0];
  } else {
    throw ConfigError("initial: unknown preset '" + name + "'");
  }
  return spec;
}

GridSpec RunConfig::grid() const { return GridSpec(nx, ny, hx, hy); }

ModelParams RunConfig::params() const {
  ModelParams m;
  m.p = p;
  m.beta = beta;
  m.q = q;
  m.eps_mode = eps_mode;
  m.dt = T / j;
  m.eps = (eps_mode == EpsMode::coupled) ? m.dt : eps;
  return m;
}

void RunConfig::validate() const {
  grid();  // throws on bad nx/ny/hx/hy
  if (!(p > 1.0)) throw ConfigError("p must exceed 1");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (!(q >= 0.0)) throw ConfigError("q must be >= 0");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (j < 1) throw ConfigError("j must be >= 1");
  if (eps_mode == EpsMode::fixed && !(eps > 0.0)) {
    throw ConfigError("eps must be positive in fixed mode");
  }
  if (!(ledger_rel_tol > 0.0) || !(mass_rel_tol > 0.0)) {
    throw ConfigError("ledger_rel_tol and mass_rel_tol must be positive");
  }
  if (snapshots == SnapshotMode::every_n && snapshot_every < 1) {
    throw ConfigError("snapshots: cadence must be >= 1");
  }
  solver.validate();
  params().validate();
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool eps_seen = false;
  std::map<std::string, std::string> kv;

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    }
    if (kv.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv[key] = value;
  }

  for (const auto& [key, value] : kv) {
    if (key == "nx") cfg.nx = static_cast<int>(parse_int(value, key));
    else if (key == "ny") cfg.ny = static_cast<int>(parse_int(value, key));
    else if (key == "hx") cfg.hx = parse_double(value, key);
    else if (key == "hy") cfg.hy = parse_double(value, key);
    else if (key == "p") cfg.p = parse_double(value, key);
    else if (key == "beta") cfg.beta = parse_double(value, key);
    else if (key == "q") cfg.q = parse_double(value, key);
    else if (key == "eps_mode") {
      if (value == "coupled") cfg.eps_mode = EpsMode::coupled;
      else if (value == "fixed") cfg.eps_mode = EpsMode::fixed;
      else throw ConfigError("eps_mode: expected 'coupled' or 'fixed'");
    } else if (key == "eps") {
      cfg.eps = parse_double(value, key);
      eps_seen = true;
    } else if (key == "T") cfg.T = parse_double(value, key);
    else if (key == "j") cfg.j = static_cast<int>(parse_int(value, key));
    else if (key == "cg_tol") cfg.solver.cg_tol = parse_double(value, key);
    else if (key == "cg_max_iter") cfg.solver.cg_max_iter = static_cast<int>(parse_int(value, key));
    else if (key == "picard_tol") cfg.solver.picard_tol = parse_double(value, key);
    else if (key == "picard_max_iter") cfg.solver.picard_max_iter = static_cast<int>(parse_int(value, key));
    else if (key == "fp_tol") cfg.solver.fp_tol = parse_double(value, key);
    else if (key == "fp_max_iter") cfg.solver.fp_max_iter = static_cast<int>(parse_int(value, key));
    else if (key == "initial") cfg.initial = InitialSpec::parse(value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "snapshots") {
      if (value == "auto") cfg.snapshots = SnapshotMode::automatic;
      else if (value == "off") cfg.snapshots = SnapshotMode::off;
      else {
        cfg.snapshots = SnapshotMode::every_n;
        cfg.snapshot_every = static_cast<int>(parse_int(value, key));
      }
    } else if (key == "ledger_rel_tol") cfg.ledger_rel_tol = parse_double(value, key);
    else if (key == "mass_rel_tol") cfg.mass_rel_tol = parse_double(value, key);
    else throw ConfigError("unknown key '" + key + "'");
  }

  if (cfg.eps_mode == EpsMode::coupled && eps_seen) {
    throw ConfigError("eps is set by dt in coupled mode; use eps_mode = fixed");
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string print_config(const RunConfig& cfg) {
  std::string out;
  auto emit = [&](const std::string& k, const std::string& v) {
    out += k + " = " + v + "\n";
  };
  emit("nx", std::to_string(cfg.nx));
  emit("ny", std::to_string(cfg.ny));
  emit("hx", fmt(cfg.hx));
  emit("hy", fmt(cfg.hy));
  emit("p", fmt(cfg.p));
  emit("beta", fmt(cfg.beta));
  emit("q", fmt(cfg.q));
  emit("eps_mode", cfg.eps_mode == EpsMode::coupled ? "coupled" : "fixed");
  if (cfg.eps_mode == EpsMode::fixed) emit("eps", fmt(cfg.eps));
  emit("T", fmt(cfg.T));
  emit("j", std::to_string(cfg.j));
  emit("cg_tol", fmt(cfg.solver.cg_tol));
  emit("cg_max_iter", std::to_string(cfg.solver.cg_max_iter));
  emit("picard_tol", fmt(cfg.solver.picard_tol));
  emit("picard_max_iter", std::to_string(cfg.solver.picard_max_iter));
  emit("fp_tol", fmt(cfg.solver.fp_tol));
  emit("fp_max_iter", std::to_string(cfg.solver.fp_max_iter));
  emit("initial", cfg.initial.to_string());
  emit("out", cfg.out_dir);
  if (cfg.snapshots == SnapshotMode::automatic) emit("snapshots", "auto");
  else if (cfg.snapshots == SnapshotMode::off) emit("snapshots", "off");
  else emit("snapshots", std::to_string(cfg.snapshot_every));
  emit("ledger_rel_tol", fmt(cfg.ledger_rel_tol));
  emit("mass_rel_tol", fmt(cfg.mass_rel_tol));
  return out;
}

ScalarField make_initial_data(const InitialSpec& spec, const GridSpec& grid) {
  ScalarField u(grid);
  switch (spec.kind) {
    case InitialSpec::Kind::constant:
      for (double& v : u.values) v = spec.c;
      break;
    case InitialSpec::Kind::gaussian_bump:
      for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
          const double dx = grid.xc(i) - spec.x0;
          const double dy = grid.yc(j) - spec.y0;
          u.at(i, j) = spec.amp *
                       std::exp(-(dx * dx + dy * dy) / (2.0 * spec.sigma * spec.sigma));
        }
      }
      break;
    case InitialSpec::Kind::cone:
      for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
          const double dx = grid.xc(i) - spec.x0;
          const double dy = grid.yc(j) - spec.y0;
          u.at(i, j) = -spec.slope * std::hypot(dx, dy);
        }
      }
      break;
    case InitialSpec::Kind::random_smooth: {
      // Low-frequency Neumann-compatible cosine sum with 1/(1+k^2+l^2) decay.
      const double Lx = grid.nx * grid.hx, Ly = grid.ny * grid.hy;
      for (int l = 0; l <= spec.cutoff; ++l) {
        for (int k = 0; k <= spec.cutoff; ++k) {
          if (k == 0 && l == 0) continue;
          const std::uint64_t bits =
              splitmix64(spec.seed ^ (static_cast<std::uint64_t>(k) * 131 + l));
          const double a =
              (static_cast<double>(bits >> 11) * 0x1.0p-53 * 2.0 - 1.0) /
              (1.0 + k * k + l * l);
          for (int jj = 0; jj < grid.ny; ++jj) {
            for (int ii = 0; ii < grid.nx; ++ii) {
              u.at(ii, jj) += a * std::cos(M_PI * k * grid.xc(ii) / Lx) *
                              std::cos(M_PI * l * grid.yc(jj) / Ly);
            }
          }
        }
      }
      break;
    }
    case InitialSpec::Kind::file:
      u = read_field_csv(spec.path, grid);
      break;
  }
  u.validate();
  return u;
}

void write_field_csv(const ScalarField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      if (i) out << ',';
      out << fmt(f.at(i, j));
    }
    out << '\n';
  }
}

ScalarField read_field_csv(const std::string& path, const GridSpec& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  ScalarField f(grid);
  std::string line;
  int j = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (j >= grid.ny) throw std::runtime_error(path + ": too many rows for grid");
    std::stringstream ss(line);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
      if (i >= grid.nx) throw std::runtime_error(path + ": too many columns for grid");
      f.at(i, j) = parse_double(trim(item), path);
      ++i;
    }
    if (i != grid.nx) throw std::runtime_error(path + ": wrong column count");
    ++j;
  }
  if (j != grid.ny) throw std::runtime_error(path + ": wrong row count");
  f.validate();
  return f;
}

void emit_raster(const ScalarField& f, const std::string& path) {
  double lo = f.values.front(), hi = f.values.front();
  for (double v : f.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool degenerate = !(hi > lo);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << f.grid.nx << ' ' << f.grid.ny << "\n65535\n";
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      unsigned gray = 32768;
      if (!degenerate) {
        const double s = (f.at(i, j) - lo) / (hi - lo);
        gray = static_cast<unsigned>(std::lround(s * 65535.0));
      }
      const unsigned char hi8 = static_cast<unsigned char>(gray >> 8);
      const unsigned char lo8 = static_cast<unsigned char>(gray & 0xff);
      out.put(static_cast<char>(hi8));
      out.put(static_cast<char>(lo8));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);

  std::ofstream side(path + ".txt", std::ios::binary);
  if (!side) throw std::runtime_error("cannot write " + path + ".txt");
  side << "min = " << fmt(lo) << "\nmax = " << fmt(hi) << "\nnx = " << f.grid.nx
       << "\nny = " << f.grid.ny << "\ndegenerate = " << (degenerate ? 1 : 0) << "\n";
}

void write_diag_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "k,t,lyapunov,diss_mob,diss_grad,diss_mass,mass,fp_iters,fp_residual\n";
  for (const StepState& s : traj.states) {
    const StepDiagnostics& d = s.diagnostics;
    out << s.k << ',' << fmt(s.t) << ',' << fmt(d.lyapunov) << ',' << fmt(d.diss_mob)
        << ',' << fmt(d.diss_grad) << ',' << fmt(d.diss_mass) << ',' << fmt(d.mass)
        << ',' << d.fp_iterations << ',' << fmt(d.fp_residual) << '\n';
  }
}

namespace {

std::vector<int> snapshot_steps(const RunConfig& cfg, int j) {
  std::vector<int> steps;
  if (cfg.snapshots == SnapshotMode::off) return steps;
  int every = cfg.snapshot_every;
  if (cfg.snapshots == SnapshotMode::automatic) every = (j + 9) / 10;
  for (int k = 0; k <= j; k += std::max(1, every)) steps.push_back(k);
  if (steps.empty() || steps.back() != j) steps.push_back(j);
  return steps;
}

void write_run_outputs(const RunConfig& cfg, const Trajectory& traj,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream rc(dir / "resolved.cfg", std::ios::binary);
    rc << print_config(cfg);
  }
  write_diag_csv(traj, (dir / "diag.csv").string());
  char name[32];
  for (int k : snapshot_steps(cfg, traj.j)) {
    if (k >= static_cast<int>(traj.states.size())) continue;
    std::snprintf(name, sizeof(name), "u_%04d.csv", k);
    write_field_csv(traj.states[k].u, (dir / name).string());
    std::snprintf(name, sizeof(name), "v_%04d.csv", k);
    write_field_csv(traj.states[k].v, (dir / name).string());
  }
  emit_raster(traj.states.back().u, (dir / "u_final.pgm").string());
}

/// 0 on success, 3 on a violated runtime invariant.
int check_invariants(const RunConfig& cfg, const Trajectory& traj) {
  const double scale = traj.states[0].diagnostics.lyapunov;
  const LedgerReport ledger = lyapunov_ledger(traj, cfg.ledger_rel_tol * scale);
  if (ledger.flagged > 0) {
    std::cerr << "invariant violation: energy ledger slack " << ledger.max_slack
              << " exceeds " << cfg.ledger_rel_tol * scale << "\n";
    return 3;
  }
  const MassReport mass = mass_law_check(traj);
  if (mass.max_rel_defect > cfg.mass_rel_tol) {
    std::cerr << "invariant violation: mass defect " << mass.max_rel_defect
              << " exceeds " << cfg.mass_rel_tol << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int run_single(const RunConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const GridSpec grid = cfg.grid();
  const ScalarField u0 = make_initial_data(cfg.initial, grid);
  const std::filesystem::path dir(cfg.out_dir);

  RunConfig used = cfg;
  int attempts = opts.retry_halve_dt ? opts.max_retries : 0;
  for (;;) {
    try {
      const Trajectory traj =
          advance(u0, used.T, used.j, used.params(), used.solver);
      write_run_outputs(used, traj, dir);
      return check_invariants(used, traj);
    } catch (const StepFailure& f) {
      if (attempts-- > 0) {
        used.j *= 2;  // restart the whole run; dt and eps stay coupled
        std::cerr << "step " << f.step << " did not converge; retrying with j = "
                  << used.j << "\n";
        continue;
      }
      std::filesystem::create_directories(dir);
      {
        std::ofstream rc(dir / "resolved.cfg", std::ios::binary);
        rc << print_config(used);
      }
      write_diag_csv(f.partial, (dir / "diag.csv").string());
      std::cerr << "run aborted: " << f.what() << "\n";
      return 2;
    }
  }
}

int thread_cap() {
  if (const char* env = std::getenv("CRYSTAL_RELAX_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

int run_refinement(const RunConfig& cfg, int levels) {
  cfg.validate();
  if (levels < 2) throw ConfigError("refine: need at least 2 levels");
  const GridSpec grid = cfg.grid();
  const ScalarField u0 = make_initial_data(cfg.initial, grid);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);

  std::vector<Trajectory> trajs(levels);
  std::vector<std::string> errors(levels);
  std::vector<int> js(levels);
  for (int l = 0; l < levels; ++l) js[l] = cfg.j << l;

  auto run_level = [&](int l) {
    try {
      trajs[l] = advance(u0, cfg.T, js[l], cfg.params().with_dt(cfg.T / js[l]),
                         cfg.solver);
    } catch (const SolverError& e) {
      errors[l] = e.what();
    }
  };

  // Levels are independent; run them on up to thread_cap() workers.
  const int workers = std::min(levels, thread_cap());
  if (workers > 1) {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int l = w; l < levels; l += workers) run_level(l);
      });
      (void)next;
    }
    for (auto& t : pool) t.join();
  } else {
    for (int l = 0; l < levels; ++l) run_level(l);
  }

  int code = 0;
  for (int l = 0; l < levels; ++l) {
    if (!errors[l].empty()) {
      std::cerr << "level j = " << js[l] << " failed: " << errors[l] << "\n";
      code = 2;
      continue;
    }
    RunConfig level_cfg = cfg;
    level_cfg.j = js[l];
    level_cfg.out_dir = (dir / ("level-" + std::to_string(js[l]))).string();
    write_run_outputs(level_cfg, trajs[l], level_cfg.out_dir);
    const int c = check_invariants(level_cfg, trajs[l]);
    if (c != 0 && code == 0) code = c;
  }
  if (code != 0) return code;

  std::ofstream out(dir / "cauchy.csv", std::ios::binary);
  out << "j_coarse,j_fine,p,norm\n";
  for (int l = 0; l + 1 < levels; ++l) {
    const double norm = refinement_cauchy(trajs[l], trajs[l + 1], cfg.p);
    out << js[l] << ',' << js[l + 1] << ',' << fmt(cfg.p) << ',' << fmt(norm) << '\n';
  }
  return 0;
}

int run_verify(const SampleConfig& cfg) {
  const std::vector<OracleResult> results = run_all_oracles(cfg);
  bool all_pass = true;
  for (const OracleResult& r : results) {
    std::cout << r.name << ": " << r.samples << " samples, " << r.failures
              << " failures";
    if (r.failures > 0) std::cout << ", worst violation " << fmt(r.worst_violation);
    std::cout << "\n";
    all_pass = all_pass && r.passed();
  }
  if (!all_pass) {
    std::cout << "oracle,index,a0,a1,a2,a3,a4,a5,violation\n";
    for (const OracleResult& r : results) {
      for (const Counterexample& ce : r.examples) {
        std::cout << r.name << ',' << ce.index;
        for (double a : ce.args) std::cout << ',' << fmt(a);
        std::cout << ',' << fmt(ce.violation) << '\n';
      }
    }
  }
  return all_pass ? 0 : 1;
}

}  // namespace crystal
