#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hermifp/multi_index.hpp"

namespace hermifp {

/// Sparse multivariate polynomial in up to kMaxDims variables.
/// Terms map monomial exponents to coefficients; zero coefficients are
/// pruned eagerly so that degree queries are exact.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int dims) : dims_(dims) {}

  static Polynomial constant(int dims, double c);
  /// The monomial c * x_dim^power.
  static Polynomial monomial(int dims, int dim, int power, double c = 1.0);
  /// A univariate polynomial sum_k coeffs[k] * x_dim^k embedded in `dims`
  /// variables.
  static Polynomial from_coeffs(int dims, int dim,
                                std::span<const double> coeffs);

  int dims() const { return dims_; }
  const std::map<MultiIndex, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }

  Polynomial derivative(int dim) const;
  double eval(std::span<const double> x) const;

  int degree(int dim) const;
  int total_degree() const;

  void add_term(const MultiIndex& exponents, double c);
  std::string to_string() const;

 private:
  int dims_ = 1;
  std::map<MultiIndex, double> terms_;
};

/// Univariate helpers for potentials stored as ascending coefficient lists.
double poly_eval(std::span<const double> coeffs, double x);
std::vector<double> poly_derivative(std::span<const double> coeffs);
int poly_degree(std::span<const double> coeffs);

/// A linear differential operator with polynomial coefficients,
///   L = sum_k  f_k(x) * d^{a_k},
/// closed under addition, composition, and conjugation by exp(-phi) with
/// polynomial phi.  This is enough to express every Fokker–Planck-type
/// operator assembled by the library and to move it between weighted
/// representations exactly (no quadrature involved).
class DiffOp {
 public:
  struct Term {
    Polynomial coeff;
    MultiIndex order = {0, 0, 0};
  };

  DiffOp() = default;
  explicit DiffOp(int dims) : dims_(dims) {}

  static DiffOp multiply(const Polynomial& f);
  static DiffOp partial(int dims, int dim, int order = 1);
  /// d/dx_dim ( f . ) expanded by the product rule: f d_dim + (d_dim f).
  static DiffOp divergence_of(int dims, int dim, const Polynomial& f);

  int dims() const { return dims_; }
  const std::vector<Term>& terms() const { return terms_; }

  DiffOp& operator+=(const DiffOp& o);
  DiffOp operator+(const DiffOp& o) const;
  DiffOp operator*(double s) const;

  /// Operator composition: (*this)(other(u)).
  DiffOp compose(const DiffOp& other) const;

  /// exp(+phi) L exp(-phi .): each d_i becomes d_i - (d_i phi).
  /// Exact at the operator level; phi must be polynomial.
  DiffOp conjugate_by_exp(const Polynomial& phi) const;

  /// Apply to a polynomial (used by weak-form diagnostics and tests).
  Polynomial apply(const Polynomial& p) const;

  /// Per-dimension reach: degree(coeff, dim) + order[dim], maximised over
  /// terms.  Bounds how far the assembled matrix couples Hermite indices.
  std::array<int, kMaxDims> reach() const;

  void add_term(Polynomial coeff, const MultiIndex& order);
  std::string to_string() const;

 private:
  void canonicalize();

  int dims_ = 1;
  std::vector<Term> terms_;
};

}  // namespace hermifp
