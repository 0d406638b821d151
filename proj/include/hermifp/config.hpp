#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hermifp/bifurcation.hpp"
#include "hermifp/mc.hpp"
#include "hermifp/problem.hpp"
#include "hermifp/solver.hpp"

namespace hermifp {

/// A fully resolved run description: the command, the problem, every
/// numerical knob with defaults applied, and the artifact plumbing.
/// `canonical` is a deterministic serialization of the resolved state (two
/// runs with the same canonical text produce bit-identical artifacts) and
/// `hash` its FNV-1a digest, stamped into every artifact header.
struct RunConfig {
  std::string command;

  // [problem]
  ProblemSpec problem;
  bool beta_given = false;
  std::vector<double> beta_grid;  // sweep values; empty unless provided
  double frozen_mean = 0.0;       // fixed mean used by solve-linear

  // [numerics]
  MapBackend backend = MapBackend::WhiteExact;
  SpectralMapConfig map;  // shape, degrees, sigma, quadrature, x-weight
  TimeScheme scheme = TimeScheme::RK45;
  double dt = 1.0;
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  double t_final = 10.0;
  bool steady = false;
  bool renormalize = true;
  int observe_points = 200;
  bool eigen_diagnostic = false;

  // [init]
  double init_mean = 0.0;
  double init_stddev = 1.0;

  // [mc]
  McConfig mc;

  // [continuation]
  double beta_min = 0.0;
  double beta_max = 0.0;
  double seed_beta = std::numeric_limits<double>::quiet_NaN();  // NaN: beta_max
  double scan_min = -2.0;
  double scan_max = 2.0;
  int scan_grid = 101;
  ContinuationControl control;

  // [output]
  std::map<std::string, std::string> artifact;  // role -> filename override
  std::vector<double> grid_min, grid_max;       // per dimension, resolved
  std::vector<int> grid_points;

  // Execution details; never part of the canonical text or the hash.
  int threads = 1;

  std::string canonical;
  std::uint64_t hash = 0;

  /// Output filename for an artifact role, honoring [output] overrides.
  std::string artifact_name(const std::string& role, const std::string& fallback) const;

  /// Pending solver configuration assembled from the [numerics] keys.
  SolverConfig solver_config() const;
};

/// Parses the documented config grammar: `key = value` lines grouped under
/// bracketed sections, `command` in the root section, arrays in square
/// brackets, `#` comments.  Unknown sections or keys are hard errors naming
/// the offender; keys required by the command but missing are reported
/// exhaustively in a single error.  `command_hint` supplies the command when
/// the text has no `command` key (the CLI passes its subcommand); a
/// conflicting hint is an error.
RunConfig parse_config(const std::string& text, const std::string& command_hint = "");

/// Recomputes `canonical` and `hash` from the resolved fields.  Called by
/// parse_config; call again after programmatic overrides (seed, grids).
void canonicalize_config(RunConfig& cfg);

const std::vector<std::string>& known_commands();

const char* to_string(XWeight w);
const char* to_string(TimeScheme s);
IndexSet::Shape shape_from_string(const std::string& s);
XWeight x_weight_from_string(const std::string& s);
TimeScheme scheme_from_string(const std::string& s);

}  // namespace hermifp
