#include "hermifp/asymptotics.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "hermifp/operators.hpp"
#include "hermifp/poly.hpp"

namespace hermifp {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005;

std::vector<double> effective_potential(std::span<const double> v, double m, double theta) {
  std::vector<double> out(v.begin(), v.end());
  if (out.size() < 3) out.resize(3, 0.0);
  out[0] += 0.5 * theta * m * m;
  out[1] -= theta * m;
  out[2] += 0.5 * theta;
  return out;
}

struct DensityIntegrals {
  double lo = 0, hi = 0;         // decay support of beta * V_eff
  double exponent_shift = 0;     // min of beta * V_eff over the support
  double z_shifted = 0;          // int exp(-(beta V_eff - shift))
};

DensityIntegrals density_window(std::span<const double> v_eff, double beta) {
  std::vector<double> coeffs(v_eff.begin(), v_eff.end());
  auto phi = [&](double x) { return beta * poly_eval(coeffs, x); };
  DensityIntegrals di;
  std::tie(di.lo, di.hi) = decay_support(phi);
  di.exponent_shift = phi(di.lo);
  const int n_scan = 2001;
  for (int i = 0; i < n_scan; ++i) {
    const double x = di.lo + (di.hi - di.lo) * i / (n_scan - 1);
    di.exponent_shift = std::min(di.exponent_shift, phi(x));
  }
  di.z_shifted = integrate_adaptive(
      [&](double x) { return std::exp(-(phi(x) - di.exponent_shift)); }, di.lo, di.hi, 1e-13);
  return di;
}

// Cached per-(m, beta, theta, V) data for the OU-corrected density.
struct CorrectionKey {
  double m, beta, theta;
  std::vector<double> v;
  bool operator<(const CorrectionKey& o) const {
    if (m != o.m) return m < o.m;
    if (beta != o.beta) return beta < o.beta;
    if (theta != o.theta) return theta < o.theta;
    return v < o.v;
  }
};

struct CorrectionData {
  std::vector<double> v_eff;
  DensityIntegrals window;
  double c_ou = 0;
};

std::shared_mutex g_correction_mutex;
std::map<CorrectionKey, CorrectionData> g_correction_cache;

// g(x) = -(beta/2) V_eff'(x)^2 + V_eff''(x), the shape of the first
// correction before the zero-integral constant is added.
double correction_shape(std::span<const double> v_eff_slope,
                        std::span<const double> v_eff_curv, double beta, double x) {
  const double s = poly_eval(v_eff_slope, x);
  return -0.5 * beta * s * s + poly_eval(v_eff_curv, x);
}

const CorrectionData& correction_data(double m, double beta, double theta,
                                      std::span<const double> potential) {
  const CorrectionKey key{m, beta, theta, {potential.begin(), potential.end()}};
  {
    std::shared_lock lock(g_correction_mutex);
    auto it = g_correction_cache.find(key);
    if (it != g_correction_cache.end()) return it->second;
  }
  CorrectionData data;
  data.v_eff = effective_potential(potential, m, theta);
  data.window = density_window(data.v_eff, beta);
  const std::vector<double> slope = poly_derivative(data.v_eff);
  const std::vector<double> curv = poly_derivative(slope);
  const auto& w = data.window;
  const double num = integrate_adaptive(
      [&](double x) {
        return correction_shape(slope, curv, beta, x) *
               std::exp(-(beta * poly_eval(data.v_eff, x) - w.exponent_shift));
      },
      w.lo, w.hi, 1e-13 * std::max(1.0, w.z_shifted));
  data.c_ou = -num / w.z_shifted;

  std::unique_lock lock(g_correction_mutex);
  auto [it, inserted] = g_correction_cache.emplace(key, std::move(data));
  (void)inserted;
  return it->second;
}

}  // namespace

NoiseStationary noise_stationary(std::span<const double> v_eta, int n_points, double sigma) {
  const QuadRule rule = gauss_hermite_rule(n_points - 1, sigma);
  const std::vector<double> v(v_eta.begin(), v_eta.end());
  double z = 0, m1 = 0, m2 = 0;
  for (int i = 0; i < rule.size(); ++i) {
    const double x = rule.nodes[i];
    const double r =
        rule.weights[i] * std::exp(-poly_eval(v, x) + x * x / (2.0 * sigma * sigma));
    z += r;
    m1 += r * x;
    m2 += r * x * x;
  }
  if (!(z > 0.0) || !std::isfinite(z))
    throw SolverError("noise potential is not normalisable on the quadrature window");
  NoiseStationary out;
  out.potential = v;
  out.normalization = sigma * kSqrt2Pi * z;
  out.mean = m1 / z;
  out.variance = m2 / z - out.mean * out.mean;
  return out;
}

double compute_alpha_shift() {
  auto first_moment = [](double alpha) {
    const std::vector<double> v =
        noise_potential_coeffs(NoiseKind::AsymmetricBistable, alpha);
    auto phi = [&](double x) { return poly_eval(v, x); };
    const auto [lo, hi] = decay_support(phi);
    double shift = phi(lo);
    for (int i = 0; i <= 400; ++i)
      shift = std::min(shift, phi(lo + (hi - lo) * i / 400.0));
    return integrate_adaptive([&](double x) { return x * std::exp(-(phi(x) - shift)); }, lo,
                              hi, 1e-13);
  };
  double lo = 0.0, hi = 2.0;
  double flo = first_moment(lo), fhi = first_moment(hi);
  if (!(flo < 0.0 && fhi > 0.0))
    throw SolverError("bracket failure while centering the asymmetric noise potential");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = first_moment(mid);
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  return 0.5 * (lo + hi);
}

NoisePoisson solve_noise_poisson(std::span<const double> v_eta, int degree, double sigma,
                                 int n_points) {
  if (degree < 1) throw ConfigError("noise Poisson solve needs degree >= 1");
  const QuadRule rule = gauss_hermite_rule(std::max(n_points - 1, 2 * degree + 1), sigma);
  const int n = rule.size();
  const std::vector<double> v(v_eta.begin(), v_eta.end());

  Eigen::VectorXd r(n);
  Eigen::MatrixXd h(n, degree + 1), hp(n, degree + 1);
  for (int i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    r[i] = rule.weights[i] * std::exp(-poly_eval(v, x) + x * x / (2.0 * sigma * sigma));
    const std::vector<double> col = eval_hermite_column(degree, x, sigma);
    for (int k = 0; k <= degree; ++k) {
      h(i, k) = col[k];
      hp(i, k) = k > 0 ? std::sqrt(static_cast<double>(k)) / sigma * col[k - 1] : 0.0;
    }
  }
  const double z = r.sum();
  if (!(z > 0.0)) throw SolverError("noise potential not normalisable");
  double mean = 0.0;
  for (int q = 0; q < n; ++q) mean += r[q] * rule.nodes[q];
  mean /= z;

  Eigen::MatrixXd s(degree, degree);
  for (int i = 1; i <= degree; ++i)
    for (int j = i; j <= degree; ++j) {
      double acc = 0;
      for (int q = 0; q < n; ++q) acc += r[q] * hp(q, i) * hp(q, j);
      s(i - 1, j - 1) = s(j - 1, i - 1) = acc / z;
    }
  Eigen::VectorXd rhs(degree);
  for (int i = 1; i <= degree; ++i) {
    double acc = 0;
    for (int q = 0; q < n; ++q) acc += r[q] * (rule.nodes[q] - mean) * h(q, i);
    rhs[i - 1] = acc / z;
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  if (ldlt.info() != Eigen::Success)
    throw SolverError("noise Poisson system is singular off the constant mode");
  const Eigen::VectorXd c = ldlt.solve(rhs);

  NoisePoisson out;
  out.coeffs = Eigen::VectorXd::Zero(degree + 1);
  double phi_mean = 0;
  for (int k = 1; k <= degree; ++k) {
    out.coeffs[k] = c[k - 1];
    double ek = 0;
    for (int q = 0; q < n; ++q) ek += r[q] * h(q, k);
    phi_mean += c[k - 1] * ek / z;
  }
  out.coeffs[0] = -phi_mean;  // enforce <phi, 1>_pi = 0
  out.integrated_autocorrelation = c.dot(rhs);
  return out;
}

double compute_zeta(NoiseKind kind, int degree) {
  switch (kind) {
    case NoiseKind::White:
      throw ConfigError("white noise has no kernel normalisation");
    case NoiseKind::OrnsteinUhlenbeck:
    case NoiseKind::Harmonic:
      return std::sqrt(0.5);
    case NoiseKind::Bistable:
    case NoiseKind::AsymmetricBistable: {
      const double shift =
          kind == NoiseKind::AsymmetricBistable ? compute_alpha_shift() : 0.0;
      const std::vector<double> v = noise_potential_coeffs(kind, shift);
      const NoisePoisson poisson = solve_noise_poisson(v, degree);
      if (!(poisson.integrated_autocorrelation > 0.0))
        throw SolverError("integrated noise autocorrelation is not positive");
      return 1.0 / std::sqrt(2.0 * poisson.integrated_autocorrelation);
    }
  }
  throw Error("unreachable noise kind");
}

void resolve_noise_constants(ProblemSpec& spec, int degree) {
  if (!spec.is_colored()) return;
  if (spec.noise == NoiseKind::AsymmetricBistable && std::isnan(spec.noise_shift))
    spec.noise_shift = compute_alpha_shift();
  if (std::isnan(spec.zeta)) spec.zeta = compute_zeta(spec.noise, degree);
}

double c_ou_constant(double m, double beta, double theta,
                     std::span<const double> potential) {
  return correction_data(m, beta, theta, potential).c_ou;
}

double ou_corrected_density(double x, double m, double beta, double theta, double eps,
                            std::span<const double> potential) {
  const CorrectionData& data = correction_data(m, beta, theta, potential);
  const std::vector<double> slope = poly_derivative(data.v_eff);
  const std::vector<double> curv = poly_derivative(slope);
  const double base =
      std::exp(-(beta * poly_eval(data.v_eff, x) - data.window.exponent_shift)) /
      data.window.z_shifted;
  const double corr = data.c_ou + correction_shape(slope, curv, beta, x);
  return base * (1.0 + eps * eps * corr);
}

double approx_R(NoiseKind kind, double m, double beta, double theta, double eps,
                std::span<const double> potential) {
  if (kind != NoiseKind::OrnsteinUhlenbeck)
    throw ConfigError(
        "the approximate self-consistency map is available for the OU model only");
  const CorrectionData& data = correction_data(m, beta, theta, potential);
  const auto& w = data.window;
  const double tol = 1e-13 * std::max(1.0, w.z_shifted);
  double num = 0, den = 0;
  num = integrate_adaptive(
      [&](double x) { return x * ou_corrected_density(x, m, beta, theta, eps, potential); },
      w.lo, w.hi, tol);
  den = integrate_adaptive(
      [&](double x) { return ou_corrected_density(x, m, beta, theta, eps, potential); },
      w.lo, w.hi, tol);
  if (!(std::abs(den) > 1e-300)) throw SolverError("corrected density has vanishing mass");
  return num / den;
}

namespace {

struct NoiseSpectralData {
  BasisPtr basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  Eigen::VectorXd ground;  // normalised: int phi0^2 exp(V_eta) = 1
  double lambda0 = 0;
  Eigen::SparseMatrix<double> coord;
};

NoiseSpectralData noise_spectral_data(std::span<const double> v_eta, int degree,
                                      double sigma) {
  if (degree < 1) throw ConfigError("noise ground mode needs degree >= 1");
  std::vector<double> weight(v_eta.begin(), v_eta.end());
  if (weight.size() < 3) weight.resize(3, 0.0);
  weight[2] += 1.0 / (2.0 * sigma * sigma);

  NoiseSpectralData data;
  data.basis = make_basis(IndexSet::rectangle({degree}), {sigma}, {weight},
                          degree + std::max(poly_degree(v_eta), 2) + 2);

  DiffOp op = DiffOp::divergence_of(
      1, 0, Polynomial::from_coeffs(1, 0, poly_derivative(v_eta)));
  op += DiffOp::partial(1, 0, 2);
  const OperatorMatrix g = assemble_in_basis(op, *data.basis);

  Eigen::MatrixXd gd(g.mat);
  const double scale = std::max(1.0, gd.cwiseAbs().maxCoeff());
  if (((gd - gd.transpose()).cwiseAbs().maxCoeff()) > 1e-9 * scale)
    throw Error("scalar-noise generator failed its symmetry check");
  const Eigen::MatrixXd sym = 0.5 * (gd + gd.transpose());
  data.es.compute(sym);
  if (data.es.info() != Eigen::Success)
    throw SolverError("eigen-decomposition of the noise generator failed");

  const int n = static_cast<int>(sym.rows());
  data.lambda0 = data.es.eigenvalues()[n - 1];
  Eigen::VectorXd c = data.es.eigenvectors().col(n - 1);
  c /= std::sqrt(sigma * kSqrt2Pi);
  if (c[0] < 0.0) c = -c;
  data.ground = std::move(c);
  data.coord = coordinate_matrix(*data.basis, 0).mat;
  return data;
}

}  // namespace

NoiseGroundMode noise_ground_mode(std::span<const double> v_eta, int degree, double sigma) {
  NoiseSpectralData data = noise_spectral_data(v_eta, degree, sigma);
  return {data.basis, std::move(data.ground), data.lambda0};
}

double corrective_drift(std::span<const double> v_eta, int degree, double sigma, double beta,
                        double zeta) {
  const NoiseSpectralData data = noise_spectral_data(v_eta, degree, sigma);
  const double quad = data.ground.dot(data.coord * data.ground);
  return -std::sqrt(2.0 / beta) * zeta * (sigma * kSqrt2Pi) * quad;
}

double effective_diffusion(std::span<const double> v_eta, int degree, double sigma,
                           double beta, double zeta, double drift_correction) {
  const NoiseSpectralData data = noise_spectral_data(v_eta, degree, sigma);
  const int n = static_cast<int>(data.ground.size());
  const Eigen::VectorXd p =
      drift_correction * data.ground +
      std::sqrt(2.0 / beta) * zeta * (data.coord * data.ground);
  Eigen::VectorXd q = data.es.eigenvectors().transpose() * p;
  if (std::abs(q[n - 1]) > 1e-8 * std::max(1e-300, p.norm()))
    throw SolverError(
        "forcing is not orthogonal to the noise ground mode; "
        "pass the matching corrective drift");
  double acc = 0.0;
  const double shift = std::abs(data.lambda0);
  for (int i = 0; i < n - 1; ++i) {
    const double denom = -data.es.eigenvalues()[i] + shift;
    if (!(denom > 0.0)) throw SolverError("singular resolvent in the effective diffusion");
    acc += q[i] * q[i] / denom;
  }
  return sigma * kSqrt2Pi * acc;
}

}  // namespace hermifp
