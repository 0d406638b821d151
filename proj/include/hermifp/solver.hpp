#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "hermifp/hermite.hpp"
#include "hermifp/operators.hpp"

namespace hermifp {

enum class TimeScheme { RK45, SemiImplicit };

struct SolverConfig {
  TimeScheme scheme = TimeScheme::RK45;
  /// Semi-implicit step; steady-state marching tolerates large values.
  double dt = 1.0;
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  double t_final = 10.0;
  /// Steady state: relative coefficient-change rate per unit time.
  double steady_tol = 1e-9;
  /// Rescale the state to unit mass after every accepted step.
  bool renormalize = true;
  long max_steps = 5'000'000;
  /// Times at which moments (and optionally snapshots) are recorded; the
  /// initial and final times are always included.
  std::vector<double> observe_times;
  bool store_snapshots = false;
};

struct SolveResult {
  SpectralField field;
  std::vector<double> times;
  std::vector<double> moments;
  std::vector<double> masses;
  std::vector<SpectralField> snapshots;
  bool steady = false;
  long iterations = 0;
  long rejected = 0;
  /// For steady solves: ||M rho|| / ||rho|| at the returned state.
  double residual = 0.0;
  double mean = 0.0;
};

/// d rho/dt = M rho with the scheme chosen in cfg.
SolveResult integrate_linear(const OperatorMatrix& op, const SpectralField& rho0,
                             const SolverConfig& cfg);

/// d rho/dt = M(m(rho)) rho, the discretized mean-field equation.
SolveResult integrate_mckean(const MckeanSystem& sys, const SpectralField& rho0,
                             const SolverConfig& cfg);

/// One implicit-Euler step state -> (I - dt m)^{-1} state.
Eigen::VectorXd semi_implicit_step(const Eigen::SparseMatrix<double>& m,
                                   const Eigen::VectorXd& state, double dt);

/// Stationary mode of a linear operator by inverse iteration (LU with shift
/// zero, regularized by a small shift if the factorization is singular to
/// machine precision).  The returned field has unit mass with positive sign;
/// `residual` reports ||M rho|| / ||rho|| and `steady` whether it is below
/// steady_tol.  Throws if the iteration itself fails to settle.
SolveResult steady_state_linear(const OperatorMatrix& op, const BasisPtr& basis,
                                double steady_tol = 1e-9,
                                const Eigen::VectorXd* warm_start = nullptr);

/// Semi-implicit marching of the mean-field system to stationarity: the mean
/// is frozen over each step and updated afterwards.  Detects period-two
/// oscillations of the mean (alternating increments with non-decreasing
/// amplitude over 100 steps) and reports them as a step-size problem.
SolveResult steady_state_mckean(const MckeanSystem& sys, const SpectralField& rho0,
                                const SolverConfig& cfg);

/// Diagnostic: magnitude of the eigenvalue of smallest magnitude (dense
/// solve; intended for moderate matrix sizes).
double stationary_eigenvalue_magnitude(const Eigen::SparseMatrix<double>& m);

/// Product initial state: Gaussian N(mean, stddev^2) in the spatial
/// coordinate times the stationary law of the auxiliary noise, projected
/// onto the basis by the quadrature transform and normalized to unit mass.
/// The spatial factor is modulated by exp(-r/2), r the non-Gaussian part of
/// the basis weight exponent; for a plain Hermite-function basis (r = 0)
/// this is the exact Gaussian, while for a Boltzmann-tilted basis it is the
/// nearest representable start (a plain Gaussian has infinite weighted norm
/// against a confining tilt).  Requires stddev < sqrt(2) * sigma[0].
SpectralField gaussian_start(const ProblemSpec& spec, const BasisPtr& basis, double mean,
                             double stddev);

}  // namespace hermifp
