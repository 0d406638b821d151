#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hermifp/hermite.hpp"
#include "hermifp/problem.hpp"

namespace hermifp {

/// Moments of the stationary law pi ~ exp(-V_eta) of a scalar noise
/// potential, computed by Gauss–Hermite quadrature against a wide reference
/// Gaussian.
struct NoiseStationary {
  std::vector<double> potential;
  double normalization = 0.0;  // int exp(-V_eta)
  double mean = 0.0;
  double variance = 0.0;
};

NoiseStationary noise_stationary(std::span<const double> v_eta, int n_points = 400,
                                 double sigma = 1.5);

/// Shift a of the tilted double well (eta-a)^4/4 - (eta-a)^2/2 + (eta-a)
/// making the stationary law mean-zero; found by bracketing bisection on
/// [0, 2].  Approximately 0.885.
double compute_alpha_shift();

/// Solution of the noise Poisson equation -L0 phi = eta - <eta>_pi in the
/// pi-weighted Hermite space of the given degree, with <phi, 1>_pi = 0.
/// `integrated_autocorrelation` is <eta - <eta>, phi>_pi, the time integral
/// of the stationary noise autocorrelation (Green–Kubo).
struct NoisePoisson {
  Eigen::VectorXd coeffs;  // Hermite coefficients of phi, degrees 0..d
  double integrated_autocorrelation = 0.0;
};

NoisePoisson solve_noise_poisson(std::span<const double> v_eta, int degree,
                                 double sigma = 1.0, int n_points = 400);

/// Kernel normalisation zeta = (2 int_0^inf K)^{-1/2}: analytic 1/sqrt(2)
/// for the Gaussian noises (OU, harmonic), spectral for the double wells.
double compute_zeta(NoiseKind kind, int degree = 60);

/// Fill in spec.zeta (and the asymmetric-bistable shift) when unset.
void resolve_noise_constants(ProblemSpec& spec, int degree = 60);

/// Constant making the first correction of the small-correlation-time
/// density expansion integrate to zero; cached per (m, beta, theta, V).
double c_ou_constant(double m, double beta, double theta,
                     std::span<const double> potential);

/// x-marginal density including the first OU correction:
///   rho_inf(x) * [1 + eps^2 (C - (beta/2) V_eff'(x)^2 + V_eff''(x))],
/// with V_eff = V + theta (x - m)^2 / 2 and rho_inf ~ exp(-beta V_eff).
double ou_corrected_density(double x, double m, double beta, double theta, double eps,
                            std::span<const double> potential);

/// First moment of the corrected density: the approximate self-consistency
/// map R0 + eps^2 R2.  Available for the OU model only.
double approx_R(NoiseKind kind, double m, double beta, double theta, double eps,
                std::span<const double> potential);

/// Ground mode of the discretized scalar-noise generator: the eigenpair of
/// smallest magnitude of the weighted-basis Galerkin matrix, normalised so
/// that int phi0^2 exp(V_eta) = 1 and signed so the leading coefficient is
/// positive.
struct NoiseGroundMode {
  BasisPtr basis;
  Eigen::VectorXd coeffs;
  double eigenvalue = 0.0;  // lambda_0 (nonpositive up to round-off)
};

NoiseGroundMode noise_ground_mode(std::span<const double> v_eta, int degree, double sigma);

/// Corrective drift mu_d = -sqrt(2/beta) zeta int eta phi0^2 exp(V_eta):
/// cancels the spurious mean of the discrete noise equilibrium (zero for
/// symmetric noise).
double corrective_drift(std::span<const double> v_eta, int degree, double sigma, double beta,
                        double zeta);

/// Effective diffusion of the discrete epsilon -> 0 limit:
///   A_d = int (-G + |lambda_0|)^{-1}(b phi0) (b phi0) exp(V_eta),
/// b = mu_d + sqrt(2/beta) zeta eta, solved in the orthogonal complement of
/// the ground mode.
double effective_diffusion(std::span<const double> v_eta, int degree, double sigma,
                           double beta, double zeta, double drift_correction);

}  // namespace hermifp
