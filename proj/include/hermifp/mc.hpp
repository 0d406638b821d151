#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hermifp/problem.hpp"

namespace hermifp {

/// Euler–Maruyama configuration for the interacting-particle system.
/// dt <= 0 selects the default min(1e-3, eps^2/4) (1e-3 for white noise);
/// colored runs must keep dt <= eps^2/2.
struct McConfig {
  int n_particles = 2000;
  double dt = 0.0;
  double burn_in = 50.0;  // discarded transient [0, T]
  double window = 50.0;   // averaging window [T, T + window]
  std::uint64_t seed = 1;
  double init_mean = 0.0;
  double init_stddev = 1.0;
  int n_batches = 20;
  bool record_trajectory = false;
  int trajectory_points = 1000;
  /// Rotates the particle-to-stream assignment without changing anything
  /// else; used to check exchangeability of the particle labels.
  int id_rotation = 0;
};

struct McEstimate {
  double m_hat = 0.0;
  double std_error = 0.0;
  /// Time-averaged second moment of the empirical measure (and its error).
  double x2_hat = 0.0;
  double x2_std_error = 0.0;
  /// Auxiliary-noise second moment; NaN for white noise.
  double eta2_hat = std::numeric_limits<double>::quiet_NaN();
  double eta2_std_error = std::numeric_limits<double>::quiet_NaN();
  /// Downsampled (t, empirical mean) series when requested.
  std::vector<std::pair<double, double>> trajectory;
};

double default_mc_dt(const ProblemSpec& spec);

/// Simulates n_particles coupled SDE paths and returns the ergodic average
/// of the empirical mean over the window, with a batch-means standard error.
/// Deterministic for fixed (spec, cfg): every particle owns a counter-based
/// random stream keyed by (seed, particle id).
McEstimate simulate(const ProblemSpec& spec, const McConfig& cfg);

struct SweepPoint {
  double beta = 0.0;
  McEstimate estimate;
  bool ok = false;
  std::string error;
};

/// Independent simulations over a list of beta values; per-point seeds are
/// derived from (cfg.seed, index), so results do not depend on sweep order
/// or thread count.  Point failures are recorded, not thrown.
std::vector<SweepPoint> sweep_beta(const ProblemSpec& tmpl, const std::vector<double>& betas,
                                   const McConfig& cfg, int threads = 1);

std::uint64_t sweep_seed(std::uint64_t master, std::size_t index);

}  // namespace hermifp
