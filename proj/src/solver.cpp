#include "hermifp/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace hermifp {

namespace {

using Vec = Eigen::VectorXd;
using RhsFn = std::function<Vec(const Vec&)>;

// Dormand–Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 35.0 / 384 - 5179.0 / 57600, kE3 = 500.0 / 1113 - 7571.0 / 16695,
                 kE4 = 125.0 / 192 - 393.0 / 640, kE5 = -2187.0 / 6784 + 92097.0 / 339200,
                 kE6 = 11.0 / 84 - 187.0 / 2100, kE7 = -1.0 / 40;

std::vector<double> observation_times(const SolverConfig& cfg) {
  std::vector<double> obs = cfg.observe_times;
  obs.push_back(cfg.t_final);
  std::sort(obs.begin(), obs.end());
  std::vector<double> out;
  for (double t : obs) {
    if (t <= 0.0 || t > cfg.t_final * (1 + 1e-12)) continue;
    if (!out.empty() && std::abs(t - out.back()) < 1e-12 * std::max(1.0, cfg.t_final)) continue;
    out.push_back(std::min(t, cfg.t_final));
  }
  return out;
}

struct Recorder {
  const BasisPtr& basis;
  const Vec& mass_vec;
  const Vec& moment_vec;
  const SolverConfig& cfg;
  SolveResult* res;

  void operator()(double t, const Vec& y) const {
    const double mass = mass_vec.dot(y);
    res->times.push_back(t);
    res->masses.push_back(mass);
    res->moments.push_back(mass != 0.0 ? moment_vec.dot(y) / mass
                                       : std::numeric_limits<double>::quiet_NaN());
    if (cfg.store_snapshots) res->snapshots.emplace_back(basis, y);
  }
};

void renormalize_state(Vec& y, const Vec& mass_vec, double t) {
  const double mass = mass_vec.dot(y);
  if (!(std::abs(mass) > 1e-300))
    throw SolverError("state lost all mass at t = " + std::to_string(t));
  y /= mass;
}

void check_finite(const Vec& y, double t) {
  if (!y.allFinite())
    throw SolverError("non-finite coefficients at t = " + std::to_string(t) +
                      "; reduce the step size or tolerances");
}

SolveResult run_rk45(const BasisPtr& basis, const RhsFn& rhs, const Vec& mass_vec,
                     const Vec& moment_vec, const SpectralField& rho0,
                     const SolverConfig& cfg) {
  SolveResult res{rho0, {}, {}, {}, {}, false, 0, 0, 0.0, 0.0};
  Recorder record{basis, mass_vec, moment_vec, cfg, &res};

  Vec y = rho0.coeffs;
  double t = 0.0;
  record(t, y);

  const std::vector<double> obs = observation_times(cfg);
  std::size_t oi = 0;
  const double span = cfg.t_final;
  if (span <= 0.0) {
    res.field = SpectralField(basis, y);
    res.mean = res.moments.back();
    return res;
  }

  Vec f1 = rhs(y);
  double h = 0.01 * (y.norm() + cfg.abs_tol) / (f1.norm() + cfg.abs_tol);
  h = std::clamp(h, 1e-8 * std::max(1.0, span), 0.1 * span);

  const int n = static_cast<int>(y.size());
  while (oi < obs.size()) {
    const double target = obs[oi];
    const double h_try = std::min(h, target - t);
    if (h_try < 1e-14 * std::max(1.0, std::abs(t)))
      throw SolverError("step size underflow at t = " + std::to_string(t));

    const Vec k1 = rhs(y);
    const Vec k2 = rhs(y + h_try * (kA21 * k1));
    const Vec k3 = rhs(y + h_try * (kA31 * k1 + kA32 * k2));
    const Vec k4 = rhs(y + h_try * (kA41 * k1 + kA42 * k2 + kA43 * k3));
    const Vec k5 = rhs(y + h_try * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
    const Vec k6 = rhs(y + h_try * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
    Vec y5 = y + h_try * (kB1 * k1 + kB3 * k3 + kB4 * k4 + kB5 * k5 + kB6 * k6);
    const Vec k7 = rhs(y5);
    const Vec err_vec =
        h_try * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = err_vec[i] / sc;
      err += e * e;
    }
    err = std::sqrt(err / n);

    if (err <= 1.0) {
      t += h_try;
      y = std::move(y5);
      check_finite(y, t);
      if (cfg.renormalize) renormalize_state(y, mass_vec, t);
      ++res.iterations;
      if (t >= target - 1e-12 * std::max(1.0, target)) {
        record(target, y);
        ++oi;
      }
      const double grow = err > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)))
                                    : 5.0;
      h = std::max(h_try * grow, h * (h_try < h ? 1.0 : grow));
    } else {
      ++res.rejected;
      h = h_try * std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
    if (res.iterations + res.rejected > cfg.max_steps)
      throw SolverError("step budget exhausted at t = " + std::to_string(t));
  }

  res.field = SpectralField(basis, y);
  res.mean = res.moments.back();
  return res;
}

Eigen::SparseMatrix<double> identity_minus(const Eigen::SparseMatrix<double>& m, double dt) {
  Eigen::SparseMatrix<double> id(m.rows(), m.cols());
  id.setIdentity();
  Eigen::SparseMatrix<double> a = id - dt * m;
  a.makeCompressed();
  return a;
}

SolveResult run_semi_implicit(const BasisPtr& basis,
                              const std::function<const Eigen::SparseMatrix<double>&(double)>&
                                  matrix_at,  // returns M(m); for linear ops m is ignored
                              bool mean_dependent, const Vec& mass_vec, const Vec& moment_vec,
                              const SpectralField& rho0, const SolverConfig& cfg) {
  SolveResult res{rho0, {}, {}, {}, {}, false, 0, 0, 0.0, 0.0};
  Recorder record{basis, mass_vec, moment_vec, cfg, &res};
  if (!(cfg.dt > 0.0)) throw ConfigError("semi-implicit scheme needs dt > 0");

  Vec y = rho0.coeffs;
  double t = 0.0;
  record(t, y);
  auto mean_of = [&](const Vec& v) {
    const double mass = mass_vec.dot(v);
    if (!(std::abs(mass) > 1e-300)) throw SolverError("state lost all mass");
    return moment_vec.dot(v) / mass;
  };

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool factored = false;

  const std::vector<double> obs = observation_times(cfg);
  std::size_t oi = 0;
  while (oi < obs.size()) {
    const double target = obs[oi];
    const double h = std::min(cfg.dt, target - t);
    const double m = mean_dependent ? mean_of(y) : 0.0;
    if (mean_dependent || !factored || h != cfg.dt) {
      lu.compute(identity_minus(matrix_at(m), h));
      if (lu.info() != Eigen::Success)
        throw SolverError("semi-implicit system singular at dt = " + std::to_string(h));
      factored = (h == cfg.dt);
    }
    y = lu.solve(y);
    t += h;
    check_finite(y, t);
    if (cfg.renormalize) renormalize_state(y, mass_vec, t);
    ++res.iterations;
    if (res.iterations > cfg.max_steps)
      throw SolverError("step budget exhausted at t = " + std::to_string(t));
    if (t >= target - 1e-12 * std::max(1.0, target)) {
      record(target, y);
      ++oi;
    }
  }

  res.field = SpectralField(basis, y);
  res.mean = res.moments.back();
  return res;
}

}  // namespace

SolveResult integrate_linear(const OperatorMatrix& op, const SpectralField& rho0,
                             const SolverConfig& cfg) {
  const BasisPtr& basis = rho0.basis;
  if (op.size() != rho0.coeffs.size())
    throw Error("operator and initial state have mismatched sizes");
  const Vec mass_vec = functional_vector(*basis, Polynomial::constant(basis->dims(), 1.0));
  const Vec moment_vec = functional_vector(*basis, Polynomial::monomial(basis->dims(), 0, 1));
  if (cfg.scheme == TimeScheme::RK45) {
    return run_rk45(
        basis, [&](const Vec& y) { return Vec(op.mat * y); }, mass_vec, moment_vec, rho0, cfg);
  }
  return run_semi_implicit(
      basis, [&](double) -> const Eigen::SparseMatrix<double>& { return op.mat; }, false,
      mass_vec, moment_vec, rho0, cfg);
}

SolveResult integrate_mckean(const MckeanSystem& sys, const SpectralField& rho0,
                             const SolverConfig& cfg) {
  const BasisPtr& basis = rho0.basis;
  if (sys.base.size() != rho0.coeffs.size())
    throw Error("system and initial state have mismatched sizes");
  if (cfg.scheme == TimeScheme::RK45) {
    return run_rk45(
        basis, [&](const Vec& y) { return sys.apply(y); }, sys.mass_vec, sys.moment_vec, rho0,
        cfg);
  }
  Eigen::SparseMatrix<double> scratch;
  return run_semi_implicit(
      basis,
      [&](double m) -> const Eigen::SparseMatrix<double>& {
        scratch = sys.at_mean(m);
        return scratch;
      },
      sys.theta != 0.0, sys.mass_vec, sys.moment_vec, rho0, cfg);
}

Eigen::VectorXd semi_implicit_step(const Eigen::SparseMatrix<double>& m,
                                   const Eigen::VectorXd& state, double dt) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(identity_minus(m, dt));
  if (lu.info() != Eigen::Success)
    throw SolverError("semi-implicit system singular at dt = " + std::to_string(dt));
  Vec out = lu.solve(state);
  check_finite(out, dt);
  return out;
}

SolveResult steady_state_linear(const OperatorMatrix& op, const BasisPtr& basis,
                                double steady_tol, const Eigen::VectorXd* warm_start) {
  const int n = static_cast<int>(op.size());
  if (basis->size() != n) throw Error("operator and basis have mismatched sizes");
  const Vec mass_vec = functional_vector(*basis, Polynomial::constant(basis->dims(), 1.0));
  const Vec moment_vec = functional_vector(*basis, Polynomial::monomial(basis->dims(), 0, 1));

  double scale = 1.0;
  if (op.mat.nonZeros() > 0)
    scale = Eigen::Map<const Eigen::ArrayXd>(op.mat.valuePtr(), op.mat.nonZeros())
                .abs()
                .maxCoeff();

  Vec v;
  if (warm_start != nullptr && warm_start->size() == n && warm_start->allFinite() &&
      warm_start->norm() > 0.0) {
    v = *warm_start / warm_start->norm();
  } else {
    v = Vec::Zero(n);
    v[0] = 1.0;
  }

  // High truncations can carry spurious near-null modes concentrated at the
  // quadrature reach; they settle first but carry essentially no mass.  Such
  // modes are deflated out so the iteration converges to the mass-carrying
  // stationary mode instead of silently normalizing a ghost.
  const double mass_norm = mass_vec.norm();
  std::vector<Vec> ghosts;
  auto deflate = [&](Vec& w) {
    for (const Vec& g : ghosts) w -= g.dot(w) * g;
  };
  auto mass_free = [&](const Vec& u) {
    return std::abs(mass_vec.dot(u)) < 1e-6 * mass_norm * u.norm();
  };

  const double shifts[] = {0.0, 1e-14, 1e-12, 1e-10, 1e-8};
  long iterations = 0;
  bool settled = false;
  for (double rel_shift : shifts) {
    Eigen::SparseMatrix<double> a = op.mat;
    if (rel_shift != 0.0) {
      Eigen::SparseMatrix<double> id(n, n);
      id.setIdentity();
      a = op.mat - (rel_shift * scale) * id;
      a.makeCompressed();
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) continue;

    bool bad = false;
    Vec u = v;
    deflate(u);
    if (u.norm() > 0.0) u.normalize();
    int budget = 100;
    for (int it = 0; it < budget; ++it) {
      Vec w = lu.solve(u);
      ++iterations;
      deflate(w);
      const double nrm = w.norm();
      if (!w.allFinite() || !(nrm > 0.0) || !std::isfinite(nrm)) {
        bad = true;
        break;
      }
      w /= nrm;
      if (w.dot(u) < 0.0) w = -w;
      const double delta = (w - u).lpNorm<Eigen::Infinity>();
      u = std::move(w);
      if (delta < 1e-13) {
        if (mass_free(u)) {
          if (ghosts.size() >= 8) {
            bad = true;
            break;
          }
          ghosts.push_back(u);
          u = mass_vec / mass_norm;
          deflate(u);
          if (!(u.norm() > 0.0)) {
            bad = true;
            break;
          }
          u.normalize();
          budget += 100;
          continue;
        }
        settled = true;
        break;
      }
    }
    if (settled && !bad) {
      v = u;
      break;
    }
    if (!bad) v = u;  // keep progress as the next warm start
  }
  if (!settled) {
    const double res_norm = v.norm() > 0 ? (op.mat * v).norm() / v.norm() : 0.0;
    std::string detail = ghosts.empty() ? std::string()
                                        : " after deflating " + std::to_string(ghosts.size()) +
                                              " spurious mass-free mode(s)";
    throw SolverError("inverse iteration did not settle" + detail + "; residual " +
                      std::to_string(res_norm) +
                      " (the stationary mode is not resolved at this truncation; raise the "
                      "degrees or adapt sigma to the density's length scale)");
  }

  const double mass = mass_vec.dot(v);
  if (std::abs(mass) < 1e-12)
    throw SolverError(
        "no mass-carrying stationary mode found; check the basis weight and degrees");
  Vec c = v / mass;

  SolveResult res{SpectralField(basis, c), {}, {}, {}, {}, false, iterations, 0, 0.0, 0.0};
  res.residual = (op.mat * c).norm() / c.norm();
  res.steady = res.residual < steady_tol;
  res.mean = moment_vec.dot(c);
  return res;
}

SolveResult steady_state_mckean(const MckeanSystem& sys, const SpectralField& rho0,
                                const SolverConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("steady-state marching needs dt > 0");
  const BasisPtr& basis = rho0.basis;
  if (sys.base.size() != rho0.coeffs.size())
    throw Error("system and initial state have mismatched sizes");

  SolveResult res{rho0, {}, {}, {}, {}, false, 0, 0, 0.0, 0.0};
  Vec y = rho0.coeffs;
  if (cfg.renormalize) renormalize_state(y, sys.mass_vec, 0.0);
  double m = sys.mean_of(y);
  res.times.push_back(0.0);
  res.moments.push_back(m);
  res.masses.push_back(sys.mass_of(y));

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<double> increments;  // recent mean increments, for oscillation detection
  constexpr int kOscillationWindow = 100;

  for (long step = 1; step <= cfg.max_steps; ++step) {
    lu.compute(identity_minus(sys.at_mean(m), cfg.dt));
    if (lu.info() != Eigen::Success)
      throw SolverError("semi-implicit system singular (dt = " + std::to_string(cfg.dt) +
                        ", mean = " + std::to_string(m) + ")");
    Vec y_next = lu.solve(y);
    const double t = static_cast<double>(step) * cfg.dt;
    check_finite(y_next, t);
    if (cfg.renormalize) renormalize_state(y_next, sys.mass_vec, t);
    const double m_next = sys.mean_of(y_next);

    const double state_rate = (y_next - y).lpNorm<Eigen::Infinity>() /
                              (cfg.dt * std::max(y_next.lpNorm<Eigen::Infinity>(), 1e-300));
    const double mean_rate = std::abs(m_next - m) / (cfg.dt * std::max(1.0, std::abs(m_next)));

    increments.push_back(m_next - m);
    if (static_cast<int>(increments.size()) > kOscillationWindow)
      increments.erase(increments.begin());
    if (static_cast<int>(increments.size()) == kOscillationWindow) {
      bool alternating = true;
      for (std::size_t k = 0; k + 1 < increments.size() && alternating; ++k)
        alternating = increments[k] * increments[k + 1] < 0.0;
      if (alternating && std::abs(increments.back()) >= std::abs(increments.front()) &&
          std::abs(increments.back()) > 1e-14)
        throw SolverError(
            "the mean oscillates without decaying during steady-state marching; "
            "reduce dt (currently " +
            std::to_string(cfg.dt) + ")");
    }

    y = std::move(y_next);
    m = m_next;
    res.iterations = step;
    res.times.push_back(t);
    res.moments.push_back(m);
    res.masses.push_back(sys.mass_of(y));

    if (state_rate < cfg.steady_tol && mean_rate < cfg.steady_tol) {
      res.steady = true;
      break;
    }
  }
  if (!res.steady)
    throw SolverError("no steady state within the step budget (" +
                      std::to_string(cfg.max_steps) + " steps)");

  res.field = SpectralField(basis, y);
  res.mean = m;
  res.residual = sys.apply(y).norm() / y.norm();
  return res;
}

double stationary_eigenvalue_magnitude(const Eigen::SparseMatrix<double>& m) {
  if (m.rows() > 3000)
    throw Error("matrix too large for the dense eigenvalue diagnostic");
  const Eigen::MatrixXd dense(m);
  Eigen::EigenSolver<Eigen::MatrixXd> es(dense, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().minCoeff();
}

SpectralField gaussian_start(const ProblemSpec& spec, const BasisPtr& basis, double mean,
                             double stddev) {
  if (!basis) throw Error("null basis");
  if (basis->dims() != spec.dims())
    throw ConfigError("basis dimension does not match the noise model");
  if (!(stddev > 0.0)) throw ConfigError("initial standard deviation must be positive");
  const double sigma_x = basis->sigma(0);
  if (!(stddev < std::sqrt(2.0) * sigma_x))
    throw ConfigError(
        "initial stddev " + format_double(stddev) + " is too wide for the basis (sigma[0] = " +
        format_double(sigma_x) +
        "): the start must satisfy stddev < sqrt(2) * sigma[0] to lie in the weighted space");

  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  std::vector<std::function<double(double)>> aux;
  switch (spec.noise) {
    case NoiseKind::White:
      break;
    case NoiseKind::OrnsteinUhlenbeck:
    case NoiseKind::Harmonic: {
      auto unit_gaussian = [kInvSqrt2Pi](double v) {
        return kInvSqrt2Pi * std::exp(-0.5 * v * v);
      };
      aux.emplace_back(unit_gaussian);
      if (spec.noise == NoiseKind::Harmonic) aux.emplace_back(unit_gaussian);
      break;
    }
    case NoiseKind::Bistable:
    case NoiseKind::AsymmetricBistable: {
      const auto v_eta = noise_potential_coeffs(spec.noise, spec.noise_shift);
      auto phi = [v_eta](double v) { return poly_eval(v_eta, v); };
      const auto [lo, hi] = decay_support(phi);
      const double z =
          integrate_adaptive([&](double v) { return std::exp(-phi(v)); }, lo, hi, 1e-12);
      aux.emplace_back([phi, z](double v) { return std::exp(-phi(v)) / z; });
      break;
    }
  }

  // Modulating by exp(-residual/2) keeps the start inside the weighted
  // space of a Boltzmann-tilted basis; for a plain Hermite-function basis
  // the residual vanishes and the factor is exactly Gaussian.
  const std::vector<double>& residual = basis->weight_residual(0);
  auto f = [&](std::span<const double> x) {
    const double u = (x[0] - mean) / stddev;
    double val = kInvSqrt2Pi / stddev * std::exp(-0.5 * u * u - 0.5 * poly_eval(residual, x[0]));
    for (std::size_t k = 0; k < aux.size(); ++k) val *= aux[k](x[k + 1]);
    return val;
  };
  SpectralField field = hermite_transform(f, basis);
  const double mass = field_mass(field);
  if (!std::isfinite(mass) || mass <= 1e-12)
    throw SolverError(
        "initial state has negligible mass after projection; the basis does not resolve it "
        "(adjust the init parameters or the basis sigma)");
  field.coeffs /= mass;
  return field;
}

}  // namespace hermifp
