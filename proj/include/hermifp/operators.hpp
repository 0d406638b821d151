#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hermifp/hermite.hpp"
#include "hermifp/poly.hpp"
#include "hermifp/problem.hpp"

namespace hermifp {

/// Sparse Galerkin matrix together with its realised band width
/// max |row - col| over stored nonzeros.
struct OperatorMatrix {
  Eigen::SparseMatrix<double> mat;
  int bandwidth = 0;

  Eigen::Index size() const { return mat.rows(); }
};

/// Galerkin matrix of a differential operator acting on the weighted basis
/// functions psi_a = exp(-W/2) H_a: entries
///   M(a, b) = < exp(W/2) op( exp(-W/2) H_b ), H_a >_{g_sigma},
/// computed exactly (the conjugation is polynomial, and coordinate powers
/// and derivatives act on Hermite polynomials in closed form).  Asserts the
/// realised band width against the bound implied by the operator's
/// coefficient degrees and derivative orders.
OperatorMatrix assemble_in_basis(const DiffOp& op, const HermiteBasis& basis);

/// Same, but `op` already acts on the plain Hermite polynomials (no
/// conjugation by the basis weight).
OperatorMatrix assemble_conjugated(const DiffOp& op, const HermiteBasis& basis);

/// Multiplication by the coordinate of one dimension (tridiagonal) and the
/// plain derivative of one dimension (banded upper-triangular).
OperatorMatrix coordinate_matrix(const HermiteBasis& basis, int dim);
OperatorMatrix derivative_matrix(const HermiteBasis& basis, int dim, int order = 1);

/// Fokker–Planck generator (divergence form, acting on densities) of the
/// white-noise dynamics with the mean-field drift frozen at `mean`:
///   op rho = d/dx[(V'(x) + theta (x - mean)) rho] + beta^{-1} d^2/dx^2 rho.
DiffOp white_generator(const ProblemSpec& spec, double mean);

/// Symmetrised (Schrodinger) form of the white-noise generator at theta = 0:
///   beta^{-1} d^2/dx^2 + (V''/2 - beta (V')^2 / 4).
DiffOp schrodinger_form(const ProblemSpec& spec);

/// Auxiliary-noise generator L0 (no epsilon scaling), acting on the noise
/// dimensions of the full phase space.
DiffOp noise_generator(const ProblemSpec& spec);

/// Full colored-noise generator, with the mean-field drift frozen at `mean`:
///   d/dx[(V' + theta (x - mean)) rho] - (zeta/eps) sqrt(2/beta) eta d/dx rho
///   + eps^{-2} L0 rho + (shift/eps^2) rho - (drift_correction/eps) d/dx rho.
/// `shift` re-centres the auxiliary spectrum for noises whose generator has
/// a nonzero leading eigenvalue; `drift_correction` compensates asymmetric
/// noise (both are zero for centred noise families).
DiffOp colored_generator(const ProblemSpec& spec, double mean, double drift_correction = 0.0,
                         double shift = 0.0);

/// Which weight to attach to the spatial dimension of a basis: the Boltzmann
/// exponent beta V plus the Gaussian part, or the Gaussian part alone.
enum class XWeight { Boltzmann, Flat };

/// Per-dimension weight exponents for a basis adapted to `spec`: the chosen
/// x-weight followed by the stationary exponents of the noise dimensions.
std::vector<std::vector<double>> default_weights(const ProblemSpec& spec,
                                                 std::span<const double> sigma, XWeight xw);

/// Matrix-level builders (checking that the basis dimension matches).
OperatorMatrix white_mckean_operator(const ProblemSpec& spec, double mean,
                                     const HermiteBasis& basis);
OperatorMatrix schrodinger_operator(const ProblemSpec& spec, const HermiteBasis& basis);
OperatorMatrix colored_operator(const ProblemSpec& spec, double mean, const HermiteBasis& basis,
                                double drift_correction = 0.0, double shift = 0.0);
OperatorMatrix noise_block_operator(const ProblemSpec& spec, const HermiteBasis& basis);

/// Affine decomposition of the mean-field operator,
///   M(m) = base - theta * m * mean_coupling,
/// together with the mass and first-moment functionals of the basis.
struct MckeanSystem {
  BasisPtr basis;
  double theta = 0.0;
  OperatorMatrix base;
  OperatorMatrix mean_coupling;
  Eigen::VectorXd mass_vec;
  Eigen::VectorXd moment_vec;

  Eigen::SparseMatrix<double> at_mean(double m) const;
  /// Applies M(mean_of(c)) to c without forming the matrix.
  Eigen::VectorXd apply(const Eigen::VectorXd& c) const;
  double mass_of(const Eigen::VectorXd& c) const { return mass_vec.dot(c); }
  double mean_of(const Eigen::VectorXd& c) const;
};

MckeanSystem build_mckean_system(const ProblemSpec& spec, const BasisPtr& basis,
                                 double drift_correction = 0.0, double shift = 0.0);

/// Basis adapted to the problem: an index set of the given shape and
/// per-dimension degrees (a single entry is replicated across dimensions),
/// the default weights for the chosen x-weight, and a quadrature degree
/// defaulting to max degree + weight degree + 10 (enough margin for
/// projecting Gaussian initial states).  `sigma` may be empty (all ones) or
/// hold one common value.
BasisPtr build_adapted_basis(const ProblemSpec& spec, IndexSet::Shape shape,
                             std::vector<int> degrees, std::vector<double> sigma,
                             int quad_degree = -1, XWeight xw = XWeight::Boltzmann);

}  // namespace hermifp
