#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hermifp/common.hpp"

namespace hermifp {

/// Driving-noise families for the interacting-particle dynamics.
///   White              — standard Brownian forcing;
///   OrnsteinUhlenbeck  — Gaussian colored noise, one auxiliary variable;
///   Harmonic           — Gaussian colored noise with an oscillatory kernel,
///                        two auxiliary variables (position and velocity);
///   Bistable           — non-Gaussian noise from a symmetric double-well
///                        potential eta^4/4 - eta^2/2;
///   AsymmetricBistable — non-Gaussian noise from the shifted, tilted
///                        double-well (eta-a)^4/4 - (eta-a)^2/2 + (eta-a),
///                        with the shift a chosen so the noise is centered.
enum class NoiseKind {
  White,
  OrnsteinUhlenbeck,
  Harmonic,
  Bistable,
  AsymmetricBistable,
};

const char* to_string(NoiseKind k);
NoiseKind noise_from_string(const std::string& s);

/// Mean-field problem data: confining potential V (ascending polynomial
/// coefficients), interaction strength theta, inverse temperature beta, and
/// the noise description.  For colored noise, epsilon is the correlation
/// time parameter and zeta the kernel normalisation; zeta and the
/// asymmetric-bistable shift default to NaN and are filled in by
/// resolve_noise_constants() (analytic for Gaussian noises, computed
/// spectrally otherwise).
struct ProblemSpec {
  std::vector<double> potential = {0.0, 0.0, 0.5};  // default: x^2/2
  double theta = 0.0;
  double beta = 1.0;
  NoiseKind noise = NoiseKind::White;
  double epsilon = 0.0;
  double zeta = std::numeric_limits<double>::quiet_NaN();
  double noise_shift = std::numeric_limits<double>::quiet_NaN();

  void validate() const;

  bool is_colored() const { return noise != NoiseKind::White; }
  /// Number of auxiliary noise dimensions (0, 1, or 2).
  int noise_dims() const;
  /// Total phase-space dimension of the Fokker–Planck equation.
  int dims() const { return 1 + noise_dims(); }

  double potential_value(double x) const;
  double potential_slope(double x) const;
};

/// Coefficients of the scalar noise potential (OU: eta^2/2; double wells as
/// documented on NoiseKind).  `shift` is ignored except for
/// AsymmetricBistable.  Harmonic noise has no scalar potential; its
/// stationary exponents are eta^2/2 and lambda^2/2 per auxiliary dimension.
std::vector<double> noise_potential_coeffs(NoiseKind kind, double shift = 0.0);

/// Per-auxiliary-dimension stationary exponents (the noise part of the
/// default basis weight).
std::vector<std::vector<double>> noise_weight_exponents(const ProblemSpec& spec);

}  // namespace hermifp
