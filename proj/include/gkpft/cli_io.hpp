#pragma once
// Command-line front end.  A RunConfig is resolved in three layers --
// built-in defaults, then an optional config file, then explicit flags --
// and handed to run(), which dispatches the subcommands and owns every
// file write.  The CSV/JSON/SVG writers are exposed so tests can pin the
// formats without touching the filesystem.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gkpft/topo_sim.hpp"

namespace gkpft {

struct RunConfig {
  std::string command;  // leading-order | simulate | threshold | sweep | selftest

  // physics; defaults are the reference operating point
  std::optional<double> sigma;         // peak width, exactly one of these two
  std::optional<double> squeezing_db;  //   may be given
  double loss = 0.0;                   // photon loss in front of each homodyne
  double sv_squeezing_db = 15.0;       // gate ancilla squeezing
  double reflectivity = 0.38196601125010515;
  double v_up = 2.0 * kSqrtPi / 5.0;   // reliable-window half width
  int L = 4;                           // Bell pairs per fusion port
  int m = 3;                           // ancillae per encoded leaf, odd
  int me_iters = 3;                    // estimation rounds per qubit

  // simulation
  std::vector<int> d_list{5, 7};
  int n_trials = 2000;
  std::string mode = "ledger";  // ledger | previous | faithful
  bool analog = true;
  std::uint64_t seed = 1;
  int workers = 0;        // 0 -> GKPFT_WORKERS env var, else 1
  int sweep_points = 6;   // sigma grid size for sweep/threshold
  double sweep_span = 0.18;  // relative half width of the sigma grid

  std::string method = "proposed";  // leading-order: proposed | previous

  // outputs (threshold and sweep fall back to command-named files)
  std::string csv_path;
  std::string json_path;
  std::string svg_path;

  double resolved_sigma() const;  // from sigma or squeezing_db
  TopoConfig topo(int d) const;
  SimMode sim_mode() const;
};

// Flag/file resolution.  `args` excludes the program name.  Throws
// std::invalid_argument with the offending key in the message.
RunConfig parse_config(const std::vector<std::string>& args);

// Apply one config file on top of cfg (tests feed text directly).
// `origin` names the file in error messages.
void apply_config_file(RunConfig& cfg, const std::string& text,
                       const std::string& origin);

void validate_config(const RunConfig& cfg);

// ---- writers

std::string sweep_csv(const std::vector<SweepPoint>& pts);
std::string threshold_json(const RunConfig& cfg, const ThresholdEstimate& est);
std::string config_json(const RunConfig& cfg);  // resolved-config provenance
std::string threshold_svg(const ThresholdEstimate& est);

// ---- commands

// Compact oracle suite for `selftest`; prints one line per check plus a
// summary, returns the number of failures.
int run_selftest(std::ostream& out);

// Executes cfg.command, writing artifacts and human-readable progress to
// `out`.  Returns the process exit status (0 ok, 1 execution failure).
int run(const RunConfig& cfg, std::ostream& out);

// parse + validate + run with errors mapped to exit codes (2 bad usage).
int cli_main(int argc, const char* const* argv);

}  // namespace gkpft
