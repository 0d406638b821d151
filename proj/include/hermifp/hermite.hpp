#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hermifp/multi_index.hpp"
#include "hermifp/poly.hpp"

namespace hermifp {

/// Orthonormal probabilists' Hermite polynomial H_n(x / sigma).
/// The family is orthonormal with respect to the N(0, sigma^2) density:
///   E_{N(0,s^2)}[H_m(x/s) H_n(x/s)] = delta_{mn}.
double eval_hermite(int n, double x, double sigma = 1.0);

/// All values H_0(x/sigma) .. H_n(x/sigma) in one recursion sweep.
std::vector<double> eval_hermite_column(int n, double x, double sigma = 1.0);

/// A quadrature rule for the N(0, sigma^2) probability density: weights sum
/// to one and the (d_hat+1)-point rule integrates polynomials of degree
/// <= 2*d_hat + 1 exactly.
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

/// Gauss–Hermite rule with d_hat + 1 points, built by the Golub–Welsch
/// algorithm (eigen-decomposition of the Jacobi matrix of the three-term
/// recurrence).  Nodes are symmetrised so parity is exact.
QuadRule gauss_hermite_rule(int d_hat, double sigma = 1.0);

/// Tensorised weighted Hermite basis.
///
/// Basis functions are
///   psi_alpha(x) = prod_k exp(-W_k(x_k)/2) * H_{alpha_k}(x_k / sigma_k)
/// over the multi-indices alpha of the index set.  W_k is a per-dimension
/// polynomial weight exponent; choosing W_k = x^2/(2 sigma_k^2) makes
/// psi_alpha an orthogonal L^2 family (Hermite functions); adding a
/// Boltzmann exponent to W tilts the basis toward a target density.  The
/// basis is orthonormal in the weighted inner product with weight
/// exp(+W(x)) * g_sigma(x), g_sigma the N(0, sigma^2) density product.
class HermiteBasis {
 public:
  HermiteBasis(IndexSet iset, std::vector<double> sigma,
               std::vector<std::vector<double>> weight_exponent,
               int quad_degree);

  int dims() const { return iset_.dims(); }
  const IndexSet& iset() const { return iset_; }
  int size() const { return iset_.size(); }
  double sigma(int dim) const { return sigma_[dim]; }
  int quad_degree() const { return quad_degree_; }
  const std::vector<double>& weight_exponent(int dim) const {
    return weight_[dim];
  }
  /// W as a multivariate polynomial (sum of the per-dimension exponents).
  Polynomial weight_polynomial() const;
  /// W_k minus its Gaussian part x^2/(2 sigma_k^2); zero for a plain
  /// Hermite-function basis.
  const std::vector<double>& weight_residual(int dim) const {
    return weight_residual_[dim];
  }

  /// Quadrature for the N(0, sigma_k^2) factor (quad_degree + 1 points).
  const QuadRule& rule(int dim) const { return rule_[dim]; }
  /// Quadrature for N(0, 2 sigma_k^2); used for plain-Lebesgue functionals
  /// where the basis supplies half of the Gaussian.
  const QuadRule& doubled_rule(int dim) const { return doubled_rule_[dim]; }

  /// exp(-W(x)/2) at a point.
  double weight_factor(std::span<const double> x) const;

 private:
  IndexSet iset_;
  std::array<double, kMaxDims> sigma_ = {1, 1, 1};
  std::array<std::vector<double>, kMaxDims> weight_;
  std::array<std::vector<double>, kMaxDims> weight_residual_;
  int quad_degree_ = 0;
  std::array<QuadRule, kMaxDims> rule_;
  std::array<QuadRule, kMaxDims> doubled_rule_;
};

using BasisPtr = std::shared_ptr<const HermiteBasis>;

BasisPtr make_basis(IndexSet iset, std::vector<double> sigma,
                    std::vector<std::vector<double>> weight_exponent,
                    int quad_degree);

/// Convenience: Gaussian weight exponents W_k = x^2 / (2 sigma_k^2).
std::vector<std::vector<double>> gaussian_weight(
    const std::vector<double>& sigma);

/// A function represented by coefficients over a basis:
///   f(x) = sum_alpha coeffs[alpha] psi_alpha(x).
struct SpectralField {
  BasisPtr basis;
  Eigen::VectorXd coeffs;

  SpectralField(BasisPtr b, Eigen::VectorXd c);
  int size() const { return static_cast<int>(coeffs.size()); }
};

/// Weighted projection of f onto the basis (generalized Hermite transform):
///   coeffs[alpha] = quadrature of  f * exp(+W/2) * H_alpha  against g_sigma.
/// Exact whenever exp(+W/2) f is a polynomial with per-dimension degree
/// d_k such that d_k + max-degree_k <= 2*quad_degree + 1.
SpectralField hermite_transform(
    const std::function<double(std::span<const double>)>& f, BasisPtr basis);

double evaluate_field(const SpectralField& field, std::span<const double> x);

/// Evaluate on a tensor grid; returns row-major values (last axis fastest).
std::vector<double> evaluate_field_grid(
    const SpectralField& field, const std::vector<std::vector<double>>& axes);

/// Vector of plain-Lebesgue linear functionals  v_alpha = int p(x) psi_alpha(x) dx,
/// computed with the doubled-Gaussian rule; n_points <= 0 selects
/// quad_degree + 1 + ceil(total_degree(p)/2) points per dimension.  Exact when
/// the weight residual vanishes; otherwise converges spectrally in n_points.
Eigen::VectorXd functional_vector(const HermiteBasis& basis,
                                  const Polynomial& p, int n_points = -1);

/// int p(x) f(x) dx via functional_vector.
double field_integral(const SpectralField& field, const Polynomial& p);
double field_mass(const SpectralField& field);
/// First moment of dimension `dim`, normalised by mass.
double field_mean(const SpectralField& field, int dim = 0);

/// Marginal density along dimension `dim` on the given axis, all other
/// dimensions integrated out (plain Lebesgue).
std::vector<double> marginal_on_grid(const SpectralField& field, int dim,
                                     const std::vector<double>& axis);

/// Uniform midpoint grid helper: n cell centers covering [lo, hi].
std::vector<double> midpoint_axis(double lo, double hi, int n);

/// Adaptive Simpson quadrature of f on [a, b] to an absolute tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol = 1e-12);

/// Interval outside of which exp(-phi) is negligible relative to its peak:
/// scans a coarse grid for the minimizer of phi, then walks outward until
/// phi - min(phi) exceeds `log_margin` (so the tail mass is below
/// exp(-log_margin) relative to the peak).
std::pair<double, double> decay_support(const std::function<double(double)>& phi,
                                        double log_margin = 45.0);

}  // namespace hermifp
