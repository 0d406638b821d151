#include "hermifp/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hermifp {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310005;
}

double eval_hermite(int n, double x, double sigma) {
  if (n < 0) throw Error("Hermite degree must be nonnegative");
  double y = x / sigma;
  double hm = 0.0, h = 1.0;  // H_{-1}, H_0
  for (int k = 0; k < n; ++k) {
    // H_{k+1}(y) = (y H_k(y) - sqrt(k) H_{k-1}(y)) / sqrt(k+1)
    double hp = (y * h - std::sqrt(static_cast<double>(k)) * hm) /
                std::sqrt(static_cast<double>(k + 1));
    hm = h;
    h = hp;
  }
  return h;
}

std::vector<double> eval_hermite_column(int n, double x, double sigma) {
  std::vector<double> out(n + 1);
  double y = x / sigma;
  out[0] = 1.0;
  if (n >= 1) out[1] = y;
  for (int k = 1; k < n; ++k)
    out[k + 1] = (y * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
  return out;
}

QuadRule gauss_hermite_rule(int d_hat, double sigma) {
  if (d_hat < 0) throw Error("quadrature degree must be nonnegative");
  if (sigma <= 0.0) throw Error("quadrature sigma must be positive");
  int n = d_hat + 1;
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  if (n == 1) {
    r.nodes[0] = 0.0;
    r.weights[0] = 1.0;
    return r;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub[k - 1] = sigma * std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw SolverError("Golub-Welsch eigen-decomposition failed");
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    r.weights[i] = v0 * v0;
  }
  // Eigenvalues come back sorted; enforce exact symmetry so parity-odd
  // integrands vanish identically.
  for (int i = 0; i < n / 2; ++i) {
    int j = n - 1 - i;
    double s = 0.5 * (r.nodes[j] - r.nodes[i]);
    r.nodes[i] = -s;
    r.nodes[j] = s;
    double w = 0.5 * (r.weights[i] + r.weights[j]);
    r.weights[i] = r.weights[j] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  double total = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
  for (double& w : r.weights) w /= total;
  return r;
}

// ---------------------------------------------------------------------------
// HermiteBasis

HermiteBasis::HermiteBasis(IndexSet iset, std::vector<double> sigma,
                           std::vector<std::vector<double>> weight_exponent,
                           int quad_degree)
    : iset_(std::move(iset)), quad_degree_(quad_degree) {
  int d = iset_.dims();
  if (static_cast<int>(sigma.size()) != d)
    throw ConfigError("basis needs one sigma per dimension");
  if (static_cast<int>(weight_exponent.size()) != d)
    throw ConfigError("basis needs one weight exponent per dimension");
  for (int k = 0; k < d; ++k) {
    if (sigma[k] <= 0.0) throw ConfigError("basis sigma must be positive");
    if (quad_degree_ < iset_.max_degree(k))
      throw ConfigError("quad_degree must be at least the index-set degree");
    sigma_[k] = sigma[k];
    weight_[k] = weight_exponent[k];
    // Residual after removing the Gaussian part x^2 / (2 sigma^2).
    std::vector<double> res = weight_exponent[k];
    if (res.size() < 3) res.resize(3, 0.0);
    res[2] -= 1.0 / (2.0 * sigma_[k] * sigma_[k]);
    while (res.size() > 1 && res.back() == 0.0) res.pop_back();
    weight_residual_[k] = std::move(res);
    rule_[k] = gauss_hermite_rule(quad_degree_, sigma_[k]);
    doubled_rule_[k] = gauss_hermite_rule(quad_degree_, std::sqrt(2.0) * sigma_[k]);
  }
}

Polynomial HermiteBasis::weight_polynomial() const {
  Polynomial w(dims());
  for (int k = 0; k < dims(); ++k)
    w += Polynomial::from_coeffs(dims(), k, weight_[k]);
  return w;
}

double HermiteBasis::weight_factor(std::span<const double> x) const {
  double e = 0.0;
  for (int k = 0; k < dims(); ++k) e += poly_eval(weight_[k], x[k]);
  return std::exp(-0.5 * e);
}

BasisPtr make_basis(IndexSet iset, std::vector<double> sigma,
                    std::vector<std::vector<double>> weight_exponent,
                    int quad_degree) {
  return std::make_shared<const HermiteBasis>(
      std::move(iset), std::move(sigma), std::move(weight_exponent), quad_degree);
}

std::vector<std::vector<double>> gaussian_weight(
    const std::vector<double>& sigma) {
  std::vector<std::vector<double>> w;
  for (double s : sigma) w.push_back({0.0, 0.0, 1.0 / (2.0 * s * s)});
  return w;
}

SpectralField::SpectralField(BasisPtr b, Eigen::VectorXd c)
    : basis(std::move(b)), coeffs(std::move(c)) {
  if (!basis) throw Error("spectral field needs a basis");
  if (coeffs.size() != basis->size())
    throw Error("coefficient count does not match the index set size");
  if (!coeffs.allFinite())
    throw SolverError("spectral field has non-finite coefficients");
}

// ---------------------------------------------------------------------------
// Tensor contraction machinery

namespace {

/// Apply per-dimension linear maps to a row-major tensor (dimension 0
/// slowest).  mats[k] has shape out_k x in_k.
std::vector<double> tensor_apply(std::vector<double> data,
                                 std::array<int, kMaxDims> shape,
                                 const std::array<Eigen::MatrixXd, kMaxDims>& mats,
                                 int dims) {
  for (int k = 0; k < dims; ++k) {
    int nk = shape[k];
    int out_k = static_cast<int>(mats[k].rows());
    long left = 1, right = 1;
    for (int j = 0; j < k; ++j) left *= shape[j];
    for (int j = k + 1; j < dims; ++j) right *= shape[j];
    std::vector<double> next(static_cast<size_t>(left) * out_k * right, 0.0);
    for (long l = 0; l < left; ++l)
      for (int o = 0; o < out_k; ++o) {
        double* dst = next.data() + (l * out_k + o) * right;
        for (int i = 0; i < nk; ++i) {
          double m = mats[k](o, i);
          if (m == 0.0) continue;
          const double* src = data.data() + (l * nk + i) * right;
          for (long r = 0; r < right; ++r) dst[r] += m * src[r];
        }
      }
    data = std::move(next);
    shape[k] = out_k;
  }
  return data;
}

std::array<int, kMaxDims> dense_shape(const HermiteBasis& b) {
  std::array<int, kMaxDims> s = {1, 1, 1};
  for (int k = 0; k < b.dims(); ++k) s[k] = b.iset().max_degree(k) + 1;
  return s;
}

long flat_pos(const MultiIndex& a, const std::array<int, kMaxDims>& shape,
              int dims) {
  long p = 0;
  for (int k = 0; k < dims; ++k) p = p * shape[k] + a[k];
  return p;
}

/// Scatter index-set coefficients into a dense degree tensor.
std::vector<double> to_dense_tensor(const SpectralField& f) {
  const auto& b = *f.basis;
  auto shape = dense_shape(b);
  long total = 1;
  for (int k = 0; k < b.dims(); ++k) total *= shape[k];
  std::vector<double> dense(total, 0.0);
  for (int i = 0; i < b.size(); ++i)
    dense[flat_pos(b.iset().at(i), shape, b.dims())] = f.coeffs[i];
  return dense;
}

/// Projection with per-dimension node sets and multiplier vectors:
///   out[alpha] = sum_nodes (prod_k mult_k[i_k]) values[i] *
///                prod_k H_{alpha_k}(node_k[i_k]/sigma_k).
Eigen::VectorXd project_values(const HermiteBasis& b,
                               std::vector<double> values,
                               const std::array<const QuadRule*, kMaxDims>& rules,
                               const std::array<std::vector<double>, kMaxDims>& mult) {
  int dims = b.dims();
  std::array<int, kMaxDims> shape = {1, 1, 1};
  std::array<Eigen::MatrixXd, kMaxDims> mats;
  for (int k = 0; k < dims; ++k) {
    int n = rules[k]->size();
    int dmax = b.iset().max_degree(k);
    shape[k] = n;
    mats[k].resize(dmax + 1, n);
    for (int i = 0; i < n; ++i) {
      auto col = eval_hermite_column(dmax, rules[k]->nodes[i], b.sigma(k));
      for (int m = 0; m <= dmax; ++m) mats[k](m, i) = col[m];
    }
  }
  // Fold the node multipliers into the sample tensor, skipping exact-zero
  // samples: a vanishing sample contributes nothing even where the weight
  // factor overflows (0 * inf would otherwise poison the whole transform).
  for (std::size_t idx = 0; idx < values.size(); ++idx) {
    if (values[idx] == 0.0) continue;
    std::size_t rem = idx;
    double factor = 1.0;
    for (int k = dims - 1; k >= 0; --k) {
      factor *= mult[k][rem % shape[k]];
      rem /= shape[k];
    }
    values[idx] *= factor;
  }
  auto dense = tensor_apply(std::move(values), shape, mats, dims);
  auto dshape = dense_shape(b);
  Eigen::VectorXd out(b.size());
  for (int i = 0; i < b.size(); ++i)
    out[i] = dense[flat_pos(b.iset().at(i), dshape, dims)];
  return out;
}

std::vector<double> grid_values(
    int dims, const std::array<const QuadRule*, kMaxDims>& rules,
    const std::function<double(std::span<const double>)>& f) {
  std::array<int, kMaxDims> n = {1, 1, 1};
  long total = 1;
  for (int k = 0; k < dims; ++k) {
    n[k] = rules[k]->size();
    total *= n[k];
  }
  std::vector<double> values(total);
  std::array<double, kMaxDims> x = {0, 0, 0};
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int k = dims - 1; k >= 0; --k) {
      x[k] = rules[k]->nodes[rem % n[k]];
      rem /= n[k];
    }
    values[idx] = f(std::span<const double>(x.data(), dims));
  }
  return values;
}

}  // namespace

SpectralField hermite_transform(
    const std::function<double(std::span<const double>)>& f, BasisPtr basis) {
  const auto& b = *basis;
  int dims = b.dims();
  std::array<const QuadRule*, kMaxDims> rules = {};
  std::array<std::vector<double>, kMaxDims> mult;
  for (int k = 0; k < dims; ++k) {
    rules[k] = &b.rule(k);
    const auto& r = *rules[k];
    mult[k].resize(r.size());
    // The log-space sum keeps the multiplier finite where exp(+W/2) alone
    // would overflow but the quadrature weight cancels most of it.
    for (int i = 0; i < r.size(); ++i)
      mult[k][i] = std::exp(std::log(r.weights[i]) +
                            0.5 * poly_eval(b.weight_exponent(k), r.nodes[i]));
  }
  auto values = grid_values(dims, rules, f);
  return SpectralField(basis, project_values(b, std::move(values), rules, mult));
}

double evaluate_field(const SpectralField& field, std::span<const double> x) {
  const auto& b = *field.basis;
  std::array<std::vector<double>, kMaxDims> cols;
  for (int k = 0; k < b.dims(); ++k)
    cols[k] = eval_hermite_column(b.iset().max_degree(k), x[k], b.sigma(k));
  double sum = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    const auto& a = b.iset().at(i);
    double t = field.coeffs[i];
    for (int k = 0; k < b.dims(); ++k) t *= cols[k][a[k]];
    sum += t;
  }
  return sum * b.weight_factor(x);
}

std::vector<double> evaluate_field_grid(
    const SpectralField& field, const std::vector<std::vector<double>>& axes) {
  const auto& b = *field.basis;
  int dims = b.dims();
  if (static_cast<int>(axes.size()) != dims)
    throw Error("grid evaluation needs one axis per dimension");
  std::array<Eigen::MatrixXd, kMaxDims> mats;
  for (int k = 0; k < dims; ++k) {
    int g = static_cast<int>(axes[k].size());
    int dmax = b.iset().max_degree(k);
    mats[k].resize(g, dmax + 1);
    for (int j = 0; j < g; ++j) {
      double xj = axes[k][j];
      auto col = eval_hermite_column(dmax, xj, b.sigma(k));
      double w = std::exp(-0.5 * poly_eval(b.weight_exponent(k), xj));
      for (int m = 0; m <= dmax; ++m) mats[k](j, m) = w * col[m];
    }
  }
  return tensor_apply(to_dense_tensor(field), dense_shape(b), mats, dims);
}

Eigen::VectorXd functional_vector(const HermiteBasis& b, const Polynomial& p,
                                  int n_points) {
  int dims = b.dims();
  if (n_points <= 0) n_points = b.quad_degree() + 1 + p.total_degree() + 16;
  std::array<QuadRule, kMaxDims> own;
  std::array<const QuadRule*, kMaxDims> rules = {};
  std::array<std::vector<double>, kMaxDims> mult;
  for (int k = 0; k < dims; ++k) {
    own[k] = gauss_hermite_rule(n_points - 1, std::sqrt(2.0) * b.sigma(k));
    rules[k] = &own[k];
    mult[k].resize(own[k].size());
    // 1D Lebesgue normalisation of the doubled Gaussian: sqrt(2) sigma sqrt(2 pi).
    double norm = std::sqrt(2.0) * b.sigma(k) * kSqrt2Pi;
    for (int i = 0; i < own[k].size(); ++i)
      mult[k][i] = norm * own[k].weights[i] *
                   std::exp(-0.5 * poly_eval(b.weight_residual(k), own[k].nodes[i]));
  }
  auto values = grid_values(dims, rules,
                            [&](std::span<const double> x) { return p.eval(x); });
  return project_values(b, std::move(values), rules, mult);
}

double field_integral(const SpectralField& field, const Polynomial& p) {
  return functional_vector(*field.basis, p).dot(field.coeffs);
}

double field_mass(const SpectralField& field) {
  return field_integral(field, Polynomial::constant(field.basis->dims(), 1.0));
}

double field_mean(const SpectralField& field, int dim) {
  double mass = field_mass(field);
  if (std::abs(mass) < 1e-12)
    throw SolverError("field mass is numerically zero; moment undefined");
  return field_integral(field, Polynomial::monomial(field.basis->dims(), dim, 1)) /
         mass;
}

std::vector<double> marginal_on_grid(const SpectralField& field, int dim,
                                     const std::vector<double>& axis) {
  const auto& b = *field.basis;
  int dims = b.dims();
  std::array<Eigen::MatrixXd, kMaxDims> mats;
  for (int k = 0; k < dims; ++k) {
    int dmax = b.iset().max_degree(k);
    if (k == dim) {
      int g = static_cast<int>(axis.size());
      mats[k].resize(g, dmax + 1);
      for (int j = 0; j < g; ++j) {
        auto col = eval_hermite_column(dmax, axis[j], b.sigma(k));
        double w = std::exp(-0.5 * poly_eval(b.weight_exponent(k), axis[j]));
        for (int m = 0; m <= dmax; ++m) mats[k](j, m) = w * col[m];
      }
    } else {
      // Integrate this dimension out: row vector of int exp(-W_k/2) H_m dx.
      const QuadRule& r = b.doubled_rule(k);
      double norm = std::sqrt(2.0) * b.sigma(k) * kSqrt2Pi;
      mats[k] = Eigen::MatrixXd::Zero(1, dmax + 1);
      for (int i = 0; i < r.size(); ++i) {
        double w = norm * r.weights[i] *
                   std::exp(-0.5 * poly_eval(b.weight_residual(k), r.nodes[i]));
        auto col = eval_hermite_column(dmax, r.nodes[i], b.sigma(k));
        for (int m = 0; m <= dmax; ++m) mats[k](0, m) += w * col[m];
      }
    }
  }
  return tensor_apply(to_dense_tensor(field), dense_shape(b), mats, dims);
}

std::vector<double> midpoint_axis(double lo, double hi, int n) {
  std::vector<double> axis(n);
  double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) axis[i] = lo + (i + 0.5) * h;
  return axis;
}

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double b,
                     double fa, double fm, double fb, double whole, double tol,
                     int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol)
    return left + right + err / 15.0;
  return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol) {
  if (!(b > a)) return 0.0;
  // Split into a few panels first so narrow features are not missed by the
  // initial Simpson estimate.
  constexpr int kPanels = 16;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double lo = a + p * h;
    const double hi = lo + h;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo);
    const double fmid = f(mid);
    const double fhi = f(hi);
    const double whole = simpson(flo, fmid, fhi, h);
    total += adaptive_step(f, lo, hi, flo, fmid, fhi, whole, tol / kPanels, 48);
  }
  return total;
}

std::pair<double, double> decay_support(const std::function<double(double)>& phi,
                                        double log_margin) {
  // Coarse scan for the minimizer.
  double x_min = 0.0;
  double phi_min = phi(0.0);
  for (int i = -400; i <= 400; ++i) {
    const double x = 0.05 * i;
    const double v = phi(x);
    if (std::isfinite(v) && v < phi_min) {
      phi_min = v;
      x_min = x;
    }
  }
  auto expand = [&](double dir) {
    double x = x_min;
    double step = 0.1;
    while (std::abs(x - x_min) < 1e4) {
      x += dir * step;
      const double v = phi(x);
      if (std::isfinite(v) && v - phi_min > log_margin + std::log1p(std::abs(x))) return x;
      step = std::min(step * 1.25, 2.0);
    }
    throw SolverError("integrand support detection ran away; potential not confining?");
  };
  return {expand(-1.0), expand(+1.0)};
}

}  // namespace hermifp
