#pragma once

#include <cstdint>
#include <string>

#include "crystal/grid.hpp"
#include "crystal/model.hpp"
#include "crystal/oracles.hpp"
#include "crystal/scheme.hpp"
#include "crystal/solvers.hpp"

namespace crystal {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Initial-data presets; all lie in the discrete analogue of W^{1,2}.
struct InitialSpec {
  enum class Kind { constant, gaussian_bump, cone, random_smooth, file };
  Kind kind = Kind::gaussian_bump;
  double c = 0.0;                    // constant
  double x0 = 0.0, y0 = 0.0;         // center
  double sigma = 1.0, amp = 1.0;     // gaussian
  double slope = 1.0;                // cone
  std::uint64_t seed = 1;            // random-smooth
  int cutoff = 4;                    // random-smooth max wavenumber
  std::string path;                  // file

  std::string to_string() const;
  static InitialSpec parse(const std::string& text);
};

enum class SnapshotMode { automatic, off, every_n };

struct RunConfig {
  int nx = 32, ny = 32;
  double hx = 1.0, hy = 1.0;
  double p = 3.0, beta = 1.0, q = 1.0;
  EpsMode eps_mode = EpsMode::coupled;
  double eps = 0.0;  // fixed mode only
  double T = 0.5;
  int j = 50;
  SolverConfig solver;
  InitialSpec initial;
  std::string out_dir = "run-out";
  SnapshotMode snapshots = SnapshotMode::automatic;
  int snapshot_every = 0;
  double ledger_rel_tol = 1e-7;
  double mass_rel_tol = 1e-8;

  GridSpec grid() const;
  ModelParams params() const;  // dt = T/j, eps resolved per mode
  void validate() const;
};

/// Parses the `key = value` format (one pair per line, `#` comments).
/// Unknown keys and constraint violations are hard errors carrying the
/// offending line or field.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Canonical serialization; parse_config(print_config(c)) reproduces c.
std::string print_config(const RunConfig& cfg);

ScalarField make_initial_data(const InitialSpec& spec, const GridSpec& grid);

/// Full-precision CSV snapshot: row-major, one row per grid row,
/// 17 significant digits.
void write_field_csv(const ScalarField& f, const std::string& path);
ScalarField read_field_csv(const std::string& path, const GridSpec& grid);

/// 16-bit binary PGM with linear min-max scaling; the scaling is recorded
/// in a sidecar text file at path + ".txt".
void emit_raster(const ScalarField& f, const std::string& path);

void write_diag_csv(const Trajectory& traj, const std::string& path);

struct RunOptions {
  bool retry_halve_dt = false;
  int max_retries = 3;
};

/// Exit codes: 0 success, 2 solver non-convergence, 3 invariant violation.
int run_single(const RunConfig& cfg, const RunOptions& opts = {});
int run_refinement(const RunConfig& cfg, int levels);
int run_verify(const SampleConfig& cfg);

/// Worker-parallelism cap: CRYSTAL_RELAX_THREADS, else hardware concurrency.
int thread_cap();

}  // namespace crystal
