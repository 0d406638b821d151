#include "hermifp/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <tuple>
#include <utility>

namespace hermifp {

namespace {

// Multiplication by the coordinate on Hermite degrees 0..n-1 (tridiagonal:
// x H_m = sigma (sqrt(m+1) H_{m+1} + sqrt(m) H_{m-1})).
Eigen::MatrixXd coord_1d(int n, double sigma) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double v = sigma * std::sqrt(static_cast<double>(i + 1));
    x(i + 1, i) = v;
    x(i, i + 1) = v;
  }
  return x;
}

// Exact matrix of multiplication by x^p truncated to degrees 0..dmax: formed
// in an enlarged space so no intermediate degree is lost, then cut down.
Eigen::MatrixXd coord_power_1d(int dmax, int p, double sigma) {
  if (p == 0) return Eigen::MatrixXd::Identity(dmax + 1, dmax + 1);
  const int big = dmax + p + 1;
  const Eigen::MatrixXd x = coord_1d(big, sigma);
  Eigen::MatrixXd power = x;
  for (int k = 1; k < p; ++k) power = x * power;
  return power.topLeftCorner(dmax + 1, dmax + 1);
}

// d^a/dx^a on degrees 0..dmax: H_j' = (sqrt(j)/sigma) H_{j-1}.
Eigen::MatrixXd deriv_power_1d(int dmax, int a, double sigma) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dmax + 1, dmax + 1);
  for (int j = a; j <= dmax; ++j) {
    double v = 1.0;
    for (int t = 0; t < a; ++t) v *= std::sqrt(static_cast<double>(j - t)) / sigma;
    d(j - a, j) = v;
  }
  return d;
}

int realized_bandwidth(const Eigen::SparseMatrix<double>& m) {
  int bw = 0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      if (it.value() != 0.0)
        bw = std::max(bw, std::abs(static_cast<int>(it.row()) - static_cast<int>(it.col())));
    }
  }
  return bw;
}

// Largest |position(alpha) - position(beta)| over pairs whose multi-indices
// differ by at most `reach` in every dimension: the band width any operator
// with that reach can produce under the set's graded ordering.
int predicted_bandwidth(const IndexSet& iset, const std::array<int, kMaxDims>& reach) {
  int best = 0;
  const int nd = iset.dims();
  for (int bpos = 0; bpos < iset.size(); ++bpos) {
    const MultiIndex& beta = iset.at(bpos);
    MultiIndex lo{}, hi{}, a{};
    for (int d = 0; d < nd; ++d) {
      lo[d] = std::max(0, beta[d] - reach[d]);
      hi[d] = std::min(iset.max_degree(d), beta[d] + reach[d]);
      a[d] = lo[d];
    }
    while (true) {
      if (iset.contains(a)) best = std::max(best, std::abs(iset.position(a) - bpos));
      int d = nd - 1;
      while (d >= 0) {
        if (++a[d] <= hi[d]) break;
        a[d] = lo[d];
        --d;
      }
      if (d < 0) break;
    }
  }
  return best;
}

Polynomial mean_field_drift(const ProblemSpec& spec, double mean, int nd) {
  Polynomial drift = Polynomial::from_coeffs(nd, 0, poly_derivative(spec.potential));
  if (spec.theta != 0.0) {
    drift += Polynomial::monomial(nd, 0, 1, spec.theta);
    drift += Polynomial::constant(nd, -spec.theta * mean);
  }
  return drift;
}

void require_finite_beta(const ProblemSpec& spec) {
  if (!std::isfinite(spec.beta))
    throw ConfigError("spectral operators need a finite inverse temperature beta");
}

void require_dims(const ProblemSpec& spec, const HermiteBasis& basis) {
  if (basis.dims() != spec.dims())
    throw ConfigError("basis has " + std::to_string(basis.dims()) +
                      " dimension(s) but the noise model needs " + std::to_string(spec.dims()) +
                      " (1 space dimension plus " + std::to_string(spec.noise_dims()) +
                      " auxiliary)");
}

}  // namespace

OperatorMatrix assemble_conjugated(const DiffOp& op, const HermiteBasis& basis) {
  if (op.dims() != basis.dims())
    throw Error("operator dimension does not match basis dimension");
  const IndexSet& iset = basis.iset();
  const int nd = iset.dims();
  const int n = iset.size();

  // 1D factor matrices for (dimension, coordinate power, derivative order).
  std::map<std::tuple<int, int, int>, Eigen::MatrixXd> cache;
  auto factor = [&](int d, int p, int a) -> const Eigen::MatrixXd& {
    const auto key = std::make_tuple(d, p, a);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const int dmax = iset.max_degree(d);
      Eigen::MatrixXd t =
          coord_power_1d(dmax, p, basis.sigma(d)) * deriv_power_1d(dmax, a, basis.sigma(d));
      it = cache.emplace(key, std::move(t)).first;
    }
    return it->second;
  };

  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& term : op.terms()) {
    for (const auto& [mono, c] : term.coeff.terms()) {
      std::array<const Eigen::MatrixXd*, kMaxDims> t{};
      for (int d = 0; d < nd; ++d) t[d] = &factor(d, mono[d], term.order[d]);

      for (int bpos = 0; bpos < n; ++bpos) {
        const MultiIndex& beta = iset.at(bpos);
        std::array<std::vector<std::pair<int, double>>, kMaxDims> rows;
        bool dead = false;
        for (int d = 0; d < nd && !dead; ++d) {
          const Eigen::MatrixXd& td = *t[d];
          for (int r = 0; r < td.rows(); ++r) {
            const double v = td(r, beta[d]);
            if (v != 0.0) rows[d].push_back({r, v});
          }
          dead = rows[d].empty();
        }
        if (dead) continue;

        std::array<int, kMaxDims> pick{};
        while (true) {
          MultiIndex alpha = {0, 0, 0};
          double v = c;
          for (int d = 0; d < nd; ++d) {
            alpha[d] = rows[d][static_cast<std::size_t>(pick[d])].first;
            v *= rows[d][static_cast<std::size_t>(pick[d])].second;
          }
          if (iset.contains(alpha)) trips.emplace_back(iset.position(alpha), bpos, v);
          int d = nd - 1;
          while (d >= 0) {
            if (++pick[d] < static_cast<int>(rows[d].size())) break;
            pick[d] = 0;
            --d;
          }
          if (d < 0) break;
        }
      }
    }
  }

  OperatorMatrix out;
  out.mat.resize(n, n);
  out.mat.setFromTriplets(trips.begin(), trips.end());
  out.mat.prune([](const Eigen::Index&, const Eigen::Index&, const double& v) {
    return v != 0.0;
  });
  out.bandwidth = realized_bandwidth(out.mat);
  const int bound = predicted_bandwidth(iset, op.reach());
  if (out.bandwidth > bound)
    throw Error("assembled band width " + std::to_string(out.bandwidth) +
                " exceeds the predicted bound " + std::to_string(bound));
  return out;
}

OperatorMatrix assemble_in_basis(const DiffOp& op, const HermiteBasis& basis) {
  const Polynomial half_weight = basis.weight_polynomial() * 0.5;
  return assemble_conjugated(op.conjugate_by_exp(half_weight), basis);
}

OperatorMatrix coordinate_matrix(const HermiteBasis& basis, int dim) {
  return assemble_conjugated(DiffOp::multiply(Polynomial::monomial(basis.dims(), dim, 1)),
                             basis);
}

OperatorMatrix derivative_matrix(const HermiteBasis& basis, int dim, int order) {
  return assemble_conjugated(DiffOp::partial(basis.dims(), dim, order), basis);
}

DiffOp white_generator(const ProblemSpec& spec, double mean) {
  require_finite_beta(spec);
  DiffOp op = DiffOp::divergence_of(1, 0, mean_field_drift(spec, mean, 1));
  op += DiffOp::partial(1, 0, 2) * (1.0 / spec.beta);
  return op;
}

DiffOp schrodinger_form(const ProblemSpec& spec) {
  require_finite_beta(spec);
  const Polynomial vp = Polynomial::from_coeffs(1, 0, poly_derivative(spec.potential));
  const Polynomial vpp = vp.derivative(0);
  const Polynomial zero_order = vpp * 0.5 - (vp * vp) * (spec.beta / 4.0);
  DiffOp op = DiffOp::partial(1, 0, 2) * (1.0 / spec.beta);
  op += DiffOp::multiply(zero_order);
  return op;
}

DiffOp noise_generator(const ProblemSpec& spec) {
  const int nd = spec.dims();
  switch (spec.noise) {
    case NoiseKind::White:
      throw Error("white noise has no auxiliary generator");
    case NoiseKind::Harmonic: {
      // d/dl (l . + d/dl .) + eta d/dl - l d/deta   (eta = dim 1, l = dim 2)
      DiffOp op = DiffOp::divergence_of(nd, 2, Polynomial::monomial(nd, 2, 1));
      op += DiffOp::partial(nd, 2, 2);
      op.add_term(Polynomial::monomial(nd, 1, 1), {0, 0, 1});
      op.add_term(Polynomial::monomial(nd, 2, 1, -1.0), {0, 1, 0});
      return op;
    }
    default: {
      const std::vector<double> slope =
          poly_derivative(noise_potential_coeffs(spec.noise, spec.noise_shift));
      DiffOp op = DiffOp::divergence_of(nd, 1, Polynomial::from_coeffs(nd, 1, slope));
      op += DiffOp::partial(nd, 1, 2);
      return op;
    }
  }
}

DiffOp colored_generator(const ProblemSpec& spec, double mean, double drift_correction,
                         double shift) {
  require_finite_beta(spec);
  if (!spec.is_colored()) throw Error("colored_generator needs a colored noise model");
  if (!(spec.epsilon > 0.0)) throw ConfigError("colored noise needs epsilon > 0");
  if (!std::isfinite(spec.zeta))
    throw Error("noise normalisation zeta is unresolved; call resolve_noise_constants first");

  const int nd = spec.dims();
  const double eps = spec.epsilon;
  DiffOp op = DiffOp::divergence_of(nd, 0, mean_field_drift(spec, mean, nd));

  const double kappa = (spec.zeta / eps) * std::sqrt(2.0 / spec.beta);
  op.add_term(Polynomial::monomial(nd, 1, 1, -kappa), {1, 0, 0});

  op += noise_generator(spec) * (1.0 / (eps * eps));
  if (shift != 0.0) op += DiffOp::multiply(Polynomial::constant(nd, shift / (eps * eps)));
  if (drift_correction != 0.0) op += DiffOp::partial(nd, 0, 1) * (-drift_correction / eps);
  return op;
}

std::vector<std::vector<double>> default_weights(const ProblemSpec& spec,
                                                 std::span<const double> sigma, XWeight xw) {
  if (static_cast<int>(sigma.size()) != spec.dims())
    throw ConfigError("expected one sigma per dimension");
  auto add_gaussian = [](std::vector<double>& w, double s) {
    if (w.size() < 3) w.resize(3, 0.0);
    w[2] += 1.0 / (2.0 * s * s);
  };

  std::vector<std::vector<double>> weights;
  std::vector<double> wx;
  if (xw == XWeight::Boltzmann) {
    require_finite_beta(spec);
    wx = spec.potential;
    for (double& c : wx) c *= spec.beta;
  }
  add_gaussian(wx, sigma[0]);
  weights.push_back(std::move(wx));

  auto noise_w = noise_weight_exponents(spec);
  for (std::size_t k = 0; k < noise_w.size(); ++k) {
    add_gaussian(noise_w[k], sigma[k + 1]);
    weights.push_back(std::move(noise_w[k]));
  }
  return weights;
}

OperatorMatrix white_mckean_operator(const ProblemSpec& spec, double mean,
                                     const HermiteBasis& basis) {
  if (basis.dims() != 1) throw ConfigError("white-noise dynamics use a one-dimensional basis");
  return assemble_in_basis(white_generator(spec, mean), basis);
}

OperatorMatrix schrodinger_operator(const ProblemSpec& spec, const HermiteBasis& basis) {
  if (basis.dims() != 1)
    throw ConfigError("the symmetrised operator acts on a one-dimensional basis");
  return assemble_in_basis(schrodinger_form(spec), basis);
}

OperatorMatrix colored_operator(const ProblemSpec& spec, double mean, const HermiteBasis& basis,
                                double drift_correction, double shift) {
  require_dims(spec, basis);
  return assemble_in_basis(colored_generator(spec, mean, drift_correction, shift), basis);
}

OperatorMatrix noise_block_operator(const ProblemSpec& spec, const HermiteBasis& basis) {
  require_dims(spec, basis);
  return assemble_in_basis(noise_generator(spec), basis);
}

Eigen::SparseMatrix<double> MckeanSystem::at_mean(double m) const {
  if (theta == 0.0 || m == 0.0) return base.mat;
  Eigen::SparseMatrix<double> out = base.mat;
  out -= (theta * m) * mean_coupling.mat;
  return out;
}

double MckeanSystem::mean_of(const Eigen::VectorXd& c) const {
  const double mass = mass_vec.dot(c);
  if (std::abs(mass) < 1e-300) throw SolverError("state has vanishing mass; mean is undefined");
  return moment_vec.dot(c) / mass;
}

Eigen::VectorXd MckeanSystem::apply(const Eigen::VectorXd& c) const {
  Eigen::VectorXd out = base.mat * c;
  if (theta != 0.0) out -= (theta * mean_of(c)) * (mean_coupling.mat * c);
  return out;
}

MckeanSystem build_mckean_system(const ProblemSpec& spec, const BasisPtr& basis,
                                 double drift_correction, double shift) {
  if (!basis) throw Error("null basis");
  MckeanSystem sys;
  sys.basis = basis;
  sys.theta = spec.theta;
  if (spec.is_colored()) {
    sys.base = colored_operator(spec, 0.0, *basis, drift_correction, shift);
  } else {
    sys.base = white_mckean_operator(spec, 0.0, *basis);
  }
  sys.mean_coupling = assemble_in_basis(DiffOp::partial(basis->dims(), 0, 1), *basis);
  sys.mass_vec = functional_vector(*basis, Polynomial::constant(basis->dims(), 1.0));
  sys.moment_vec = functional_vector(*basis, Polynomial::monomial(basis->dims(), 0, 1));
  return sys;
}

BasisPtr build_adapted_basis(const ProblemSpec& spec, IndexSet::Shape shape,
                             std::vector<int> degrees, std::vector<double> sigma,
                             int quad_degree, XWeight xw) {
  const int nd = spec.dims();
  if (degrees.empty()) throw ConfigError("basis needs at least one truncation degree");
  if (degrees.size() == 1) degrees.resize(static_cast<std::size_t>(nd), degrees[0]);
  if (static_cast<int>(degrees.size()) != nd)
    throw ConfigError("expected 1 or " + std::to_string(nd) + " truncation degrees, got " +
                      std::to_string(degrees.size()));
  for (int d : degrees)
    if (d < 1) throw ConfigError("truncation degrees must be >= 1");
  if (sigma.empty()) sigma.assign(static_cast<std::size_t>(nd), 1.0);
  if (sigma.size() == 1) sigma.resize(static_cast<std::size_t>(nd), sigma[0]);
  if (static_cast<int>(sigma.size()) != nd)
    throw ConfigError("expected 1 or " + std::to_string(nd) + " scale factors, got " +
                      std::to_string(sigma.size()));
  for (double s : sigma)
    if (!(s > 0.0)) throw ConfigError("basis scales must be positive");

  IndexSet iset = [&] {
    switch (shape) {
      case IndexSet::Shape::Rectangle:
        return IndexSet::rectangle(degrees);
      case IndexSet::Shape::Triangle:
      case IndexSet::Shape::Square:
        for (int d : degrees)
          if (d != degrees[0])
            throw ConfigError("triangle and square index sets use one common degree");
        return shape == IndexSet::Shape::Triangle ? IndexSet::triangle(nd, degrees[0])
                                                  : IndexSet::square(nd, degrees[0]);
    }
    throw Error("unreachable index-set shape");
  }();

  auto weights = default_weights(spec, sigma, xw);
  int weight_degree = 2;
  for (const auto& w : weights) weight_degree = std::max(weight_degree, poly_degree(w));
  if (quad_degree < 0)
    quad_degree = *std::max_element(degrees.begin(), degrees.end()) + weight_degree + 10;
  return make_basis(std::move(iset), std::move(sigma), std::move(weights), quad_degree);
}

}  // namespace hermifp
