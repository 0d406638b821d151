#include "hermifp/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hermifp/asymptotics.hpp"

namespace hermifp {

namespace {

// Normalisation, log-partition and first moment of
// rho_m ~ exp(-beta V_eff(x; m)) with the exponent shifted by its minimum
// so the quadrature never overflows.
struct WhiteMoments {
  double log_z = 0.0;  // ln int exp(-beta V_eff)
  double first = 0.0;  // R(m)
};

WhiteMoments white_moments(double m, double beta, double theta,
                           std::span<const double> potential) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ConfigError("the white-noise map needs a finite beta > 0");
  std::vector<double> veff(potential.begin(), potential.end());
  if (veff.size() < 3) veff.resize(3, 0.0);
  veff[0] += 0.5 * theta * m * m;
  veff[1] -= theta * m;
  veff[2] += 0.5 * theta;

  auto phi = [&](double x) { return beta * poly_eval(veff, x); };
  const auto [lo, hi] = decay_support(phi);
  double phi_min = std::numeric_limits<double>::infinity();
  constexpr int kScan = 2000;
  for (int i = 0; i <= kScan; ++i)
    phi_min = std::min(phi_min, phi(lo + (hi - lo) * i / kScan));

  auto dens = [&](double x) { return std::exp(-(phi(x) - phi_min)); };
  const double tol = 1e-13 * std::max(1.0, hi - lo);
  const double z = integrate_adaptive(dens, lo, hi, tol);
  if (!(z > 0.0) || !std::isfinite(z))
    throw SolverError("normalisation quadrature of the white-noise density failed");
  const double xz = integrate_adaptive([&](double x) { return x * dens(x); }, lo, hi,
                                       tol * std::max({1.0, std::abs(lo), std::abs(hi)}));
  return {std::log(z) - phi_min, xz / z};
}

double map_residual(SelfConsistencyMap& map, double beta, double m) {
  return map(m, beta) - m;
}

struct MapJacobian {
  double f_beta = 0.0;
  double f_m = 0.0;
};

MapJacobian map_jacobian(SelfConsistencyMap& map, double beta, double m, double h) {
  MapJacobian j;
  if (beta - h > 0.0) {
    j.f_beta = (map_residual(map, beta + h, m) - map_residual(map, beta - h, m)) / (2.0 * h);
  } else {
    j.f_beta = (map_residual(map, beta + h, m) - map_residual(map, beta, m)) / h;
  }
  j.f_m = (map_residual(map, beta, m + h) - map_residual(map, beta, m - h)) / (2.0 * h);
  return j;
}

struct CorrectedPoint {
  double beta = 0.0;
  double m = 0.0;
  double residual = 0.0;
  MapJacobian jac;
  bool ok = false;
  int iterations = 0;
};

// Damped Moore–Penrose (least-squares normal) corrector on the scalar
// residual F(beta, m) = R(m, beta) - m.
CorrectedPoint correct(SelfConsistencyMap& map, double beta, double m,
                       const ContinuationControl& ctl) {
  CorrectedPoint out;
  double f = map_residual(map, beta, m);
  bool have_jac = false;
  MapJacobian j;
  int it = 0;
  for (; it < ctl.max_corrector_iterations && std::abs(f) >= ctl.corrector_tol; ++it) {
    j = map_jacobian(map, beta, m, ctl.derivative_step);
    have_jac = true;
    const double jj = j.f_beta * j.f_beta + j.f_m * j.f_m;
    if (!(jj > 1e-300) || !std::isfinite(jj)) break;
    double damp = 1.0;
    bool improved = false;
    for (int half = 0; half < 5; ++half, damp *= 0.5) {
      const double beta_try = beta - damp * f * j.f_beta / jj;
      const double m_try = m - damp * f * j.f_m / jj;
      if (!(beta_try > 0.0)) continue;
      const double f_try = map_residual(map, beta_try, m_try);
      if (std::abs(f_try) < std::abs(f)) {
        beta = beta_try;
        m = m_try;
        f = f_try;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out.ok = std::abs(f) < ctl.corrector_tol;
  if (out.ok && !have_jac) j = map_jacobian(map, beta, m, ctl.derivative_step);
  out.beta = beta;
  out.m = m;
  out.residual = std::abs(f);
  out.jac = j;
  out.iterations = it;
  return out;
}

BranchPoint make_point(const CorrectedPoint& c, double step) {
  BranchPoint p;
  p.beta = c.beta;
  p.m = c.m;
  p.slope = c.jac.f_m;
  p.step = step;
  p.residual = c.residual;
  if (std::abs(p.slope) < 1e-6)
    p.stability = Stability::Marginal;
  else
    p.stability = p.slope > 0.0 ? Stability::Unstable : Stability::Stable;
  p.pitchfork = std::abs(p.m) < 1e-6 && std::abs(p.slope) < 1e-4;
  return p;
}

}  // namespace

double white_R(double m, double beta, double theta, std::span<const double> potential) {
  return white_moments(m, beta, theta, potential).first;
}

double free_energy(double m, double beta, double theta, std::span<const double> potential) {
  const WhiteMoments wm = white_moments(m, beta, theta, potential);
  const double gap = wm.first - m;
  return -wm.log_z / beta - 0.5 * theta * gap * gap;
}

const char* to_string(MapBackend backend) {
  switch (backend) {
    case MapBackend::WhiteExact:
      return "white-exact";
    case MapBackend::AsymptoticOU:
      return "asymptotic";
    case MapBackend::SpectralLinear:
      return "spectral-linear";
    case MapBackend::SpectralMcKean:
      return "spectral-mckean";
  }
  return "?";
}

MapBackend backend_from_string(const std::string& name) {
  if (name == "white-exact" || name == "white") return MapBackend::WhiteExact;
  if (name == "asymptotic") return MapBackend::AsymptoticOU;
  if (name == "spectral-linear" || name == "spectral") return MapBackend::SpectralLinear;
  if (name == "spectral-mckean" || name == "mckean") return MapBackend::SpectralMcKean;
  throw ConfigError("unknown self-consistency backend '" + name +
                    "' (expected white-exact, asymptotic, spectral-linear or "
                    "spectral-mckean)");
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable:
      return "stable";
    case Stability::Unstable:
      return "unstable";
    case Stability::Marginal:
      return "marginal";
  }
  return "?";
}

SelfConsistencyMap::SelfConsistencyMap(MapBackend backend, ProblemSpec spec,
                                       SpectralMapConfig cfg)
    : backend_(backend), spec_(std::move(spec)), cfg_(std::move(cfg)) {
  spec_.validate();
  if (backend_ == MapBackend::WhiteExact && spec_.is_colored())
    throw ConfigError(
        "the exact white-noise map has no correlation-time parameter; use a "
        "spectral backend or the asymptotic map for colored noise");
  if (backend_ == MapBackend::AsymptoticOU && spec_.noise != NoiseKind::OrnsteinUhlenbeck)
    throw ConfigError("the asymptotic map is available for the Ornstein-Uhlenbeck model only");
  if (spec_.is_colored()) resolve_noise_constants(spec_);
  if (backend_ == MapBackend::SpectralLinear || backend_ == MapBackend::SpectralMcKean) {
    const std::size_t nd = static_cast<std::size_t>(spec_.dims());
    if (cfg_.degrees.empty() ||
        (cfg_.degrees.size() != 1 && cfg_.degrees.size() != nd))
      throw ConfigError("expected 1 or " + std::to_string(nd) + " truncation degrees");
    if (!cfg_.sigma.empty() && cfg_.sigma.size() != 1 && cfg_.sigma.size() != nd)
      throw ConfigError("expected 1 or " + std::to_string(nd) + " scale factors");
  }
}

void SelfConsistencyMap::ensure_basis(double beta) {
  if (basis_ && basis_beta_ == beta) return;
  ProblemSpec at = spec_;
  at.beta = beta;
  basis_ = build_adapted_basis(at, cfg_.shape, cfg_.degrees, cfg_.sigma, cfg_.quad_degree,
                               cfg_.x_weight);
  basis_beta_ = beta;
  drift_mu_ = 0.0;
  spectrum_shift_ = 0.0;
  if (at.noise == NoiseKind::Bistable || at.noise == NoiseKind::AsymmetricBistable) {
    const auto v_eta = noise_potential_coeffs(at.noise, at.noise_shift);
    const int d_eta = basis_->iset().max_degree(1);
    const double s_eta = basis_->sigma(1);
    spectrum_shift_ = -noise_ground_mode(v_eta, d_eta, s_eta).eigenvalue;
    if (cfg_.drift_correction) drift_mu_ = corrective_drift(v_eta, d_eta, s_eta, beta, at.zeta);
  }
}

double SelfConsistencyMap::spectral_linear(double m) {
  ProblemSpec at = spec_;
  at.beta = basis_beta_;
  const OperatorMatrix op = at.is_colored()
                                ? colored_operator(at, m, *basis_, drift_mu_, spectrum_shift_)
                                : white_mckean_operator(at, m, *basis_);
  const SolveResult res =
      steady_state_linear(op, basis_, cfg_.steady_tol, warm_.size() > 0 ? &warm_ : nullptr);
  warm_ = res.field.coeffs;
  return res.mean;
}

double SelfConsistencyMap::spectral_mckean(double m) {
  ProblemSpec at = spec_;
  at.beta = basis_beta_;
  const MckeanSystem sys = build_mckean_system(at, basis_, drift_mu_, spectrum_shift_);
  const SpectralField rho0 = gaussian_start(at, basis_, m, cfg_.init_stddev);
  return steady_state_mckean(sys, rho0, cfg_.mckean_solver).mean;
}

double SelfConsistencyMap::operator()(double m, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ConfigError("map evaluation needs a finite beta > 0");
  switch (backend_) {
    case MapBackend::WhiteExact:
      return white_R(m, beta, spec_.theta, spec_.potential);
    case MapBackend::AsymptoticOU:
      return approx_R(spec_.noise, m, beta, spec_.theta, spec_.epsilon, spec_.potential);
    case MapBackend::SpectralLinear:
      ensure_basis(beta);
      return spectral_linear(m);
    case MapBackend::SpectralMcKean:
      ensure_basis(beta);
      return spectral_mckean(m);
  }
  throw Error("unreachable backend");
}

std::vector<double> find_fixed_points(SelfConsistencyMap& map, double beta, double lo,
                                      double hi, int n_grid) {
  if (!(hi > lo) || !std::isfinite(hi - lo))
    throw ConfigError("the fixed-point search interval must be finite and nonempty");
  if (n_grid < 2) throw ConfigError("the fixed-point scan needs at least two grid points");

  auto g = [&](double m) { return map_residual(map, beta, m); };
  std::vector<double> roots;
  double x_prev = lo;
  double g_prev = g(lo);
  for (int i = 1; i < n_grid; ++i) {
    const double x = lo + (hi - lo) * i / (n_grid - 1);
    const double gx = g(x);
    if (g_prev == 0.0) roots.push_back(x_prev);
    if (g_prev * gx < 0.0) {
      double a = x_prev, b = x, ga = g_prev;
      while (b - a > 1e-9) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if (gm == 0.0) {
          a = b = mid;
          break;
        }
        if (ga * gm < 0.0) {
          b = mid;
        } else {
          a = mid;
          ga = gm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x_prev = x;
    g_prev = gx;
  }
  if (g_prev == 0.0) roots.push_back(x_prev);

  std::sort(roots.begin(), roots.end());
  std::vector<double> merged;
  for (double r : roots)
    if (merged.empty() || r - merged.back() > 1e-6) merged.push_back(r);
  return merged;
}

Stability classify_stability(SelfConsistencyMap& map, double m_root, double beta,
                             double step) {
  const double slope =
      (map(m_root + step, beta) - map(m_root - step, beta)) / (2.0 * step) - 1.0;
  if (std::abs(slope) < 1e-6) return Stability::Marginal;
  return slope > 0.0 ? Stability::Unstable : Stability::Stable;
}

BifurcationBranch continue_branch(SelfConsistencyMap& map, double beta0, double m0,
                                  double beta_lo, double beta_hi,
                                  const ContinuationControl& ctl) {
  if (!(beta_lo > 0.0) || !(beta_hi > beta_lo))
    throw ConfigError("continuation needs 0 < beta_lo < beta_hi");
  if (beta0 < beta_lo - 1e-12 || beta0 > beta_hi + 1e-12)
    throw ConfigError("the continuation start lies outside the beta range");

  BifurcationBranch branch;
  branch.backend = map.backend();
  branch.model = map.spec().noise;
  branch.epsilon = map.spec().epsilon;

  const CorrectedPoint start = correct(map, beta0, m0, ctl);
  if (!start.ok)
    throw SolverError("continuation start (beta = " + format_double(beta0) +
                      ", m = " + format_double(m0) + ") is not a fixed point (residual " +
                      format_double(start.residual) + ")");

  // Traces from the start toward `target`, leaving the start point itself out.
  auto trace = [&](double target, int budget) {
    std::vector<BranchPoint> pts;
    const double dir = target > start.beta ? 1.0 : -1.0;
    double tb = dir, tm = 0.0;
    {
      double nb = start.jac.f_m, nm = -start.jac.f_beta;
      const double nn = std::hypot(nb, nm);
      if (nn > 1e-12) {
        nb /= nn;
        nm /= nn;
        if (nb * dir < 0.0) {
          nb = -nb;
          nm = -nm;
        }
        if (std::abs(nb) > 1e-12) {
          tb = nb;
          tm = nm;
        }
      }
    }

    double beta = start.beta, m = start.m;
    double h = ctl.initial_step;
    while (static_cast<int>(pts.size()) < budget) {
      if (std::abs(beta - target) < 1e-6 * std::max(1.0, std::abs(target))) break;
      double h_use = h;
      if (std::abs(tb) > 1e-12) {
        const double room = (target - beta) / tb;
        if (room > 0.0 && room < ctl.min_step) break;  // at the range end
        if (room > 0.0 && h_use > room) h_use = room;
      }
      const CorrectedPoint c = correct(map, beta + h_use * tb, m + h_use * tm, ctl);
      if (!c.ok) {
        h *= 0.5;
        if (h < ctl.min_step) {
          branch.truncated = true;
          if (!branch.diagnostic.empty()) branch.diagnostic += "; ";
          branch.diagnostic +=
              "corrector failed at the minimal arclength step near beta = " +
              format_double(beta);
          break;
        }
        continue;
      }
      if (c.beta < beta_lo - 1e-9 || c.beta > beta_hi + 1e-9) break;

      double nb = c.jac.f_m, nm = -c.jac.f_beta;
      const double nn = std::hypot(nb, nm);
      if (nn > 1e-12) {
        nb /= nn;
        nm /= nn;
        if (nb * tb + nm * tm < 0.0) {
          nb = -nb;
          nm = -nm;
        }
        tb = nb;
        tm = nm;
      }
      beta = c.beta;
      m = c.m;
      pts.push_back(make_point(c, h_use));
      if (c.iterations <= 3) h = std::min(h * 2.0, ctl.max_step);
    }
    return pts;
  };

  std::vector<BranchPoint> down, up;
  if (start.beta > beta_lo + 1e-9) down = trace(beta_lo, ctl.max_points - 1);
  if (start.beta < beta_hi - 1e-9)
    up = trace(beta_hi, ctl.max_points - 1 - static_cast<int>(down.size()));

  branch.points.reserve(down.size() + up.size() + 1);
  branch.points.insert(branch.points.end(), down.rbegin(), down.rend());
  branch.points.push_back(make_point(start, 0.0));
  branch.points.insert(branch.points.end(), up.begin(), up.end());
  return branch;
}

std::optional<double> pitchfork_locus(const BifurcationBranch& branch) {
  const BranchPoint* prev = nullptr;
  for (const BranchPoint& p : branch.points) {
    if (std::abs(p.m) >= 1e-6) {
      prev = nullptr;
      continue;
    }
    if (prev != nullptr && prev->slope * p.slope <= 0.0 && prev->slope != p.slope) {
      const double w = prev->slope / (prev->slope - p.slope);
      return prev->beta + w * (p.beta - prev->beta);
    }
    prev = &p;
  }
  for (const BranchPoint& p : branch.points)
    if (p.pitchfork) return p.beta;
  return std::nullopt;
}

double critical_beta(SelfConsistencyMap& map, double beta_lo, double beta_hi, double tol,
                     double m0) {
  if (!(beta_lo > 0.0) || !(beta_hi > beta_lo))
    throw ConfigError("critical-beta search needs 0 < beta_lo < beta_hi");
  if (!(tol > 0.0)) throw ConfigError("critical-beta tolerance must be positive");
  auto slope = [&](double b) {
    const double h = 1e-4;
    return (map(m0 + h, b) - map(m0 - h, b)) / (2.0 * h) - 1.0;
  };
  double s_lo = slope(beta_lo);
  if (s_lo == 0.0) return beta_lo;
  const double s_hi = slope(beta_hi);
  if (s_hi == 0.0) return beta_hi;
  if (s_lo * s_hi > 0.0)
    throw SolverError("dR/dm does not cross 1 on [" + format_double(beta_lo) + ", " +
                      format_double(beta_hi) + "]");
  double a = beta_lo, b = beta_hi;
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    const double sm = slope(mid);
    if (sm == 0.0) return mid;
    if (s_lo * sm < 0.0) {
      b = mid;
    } else {
      a = mid;
      s_lo = sm;
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> critical_epsilon(double beta_c, NoiseKind kind, double theta,
                                     std::span<const double> potential) {
  if (kind != NoiseKind::OrnsteinUhlenbeck)
    throw ConfigError("the critical-epsilon expansion is available for the OU model only");
  if (!(beta_c > 0.0)) throw ConfigError("critical_epsilon needs beta_c > 0");

  const double h = 1e-4;
  auto r0 = [&](double m) { return white_R(m, beta_c, theta, potential); };
  auto r2 = [&](double m) {
    return approx_R(kind, m, beta_c, theta, 1.0, potential) - r0(m);
  };
  const double slope0 = (r0(h) - r0(-h)) / (2.0 * h);
  const double slope2 = (r2(h) - r2(-h)) / (2.0 * h);

  if (std::abs(slope2) < 1e-14) {
    if (std::abs(1.0 - slope0) < 1e-12) return {0.0};
    return {};
  }
  const double eps_sq = (1.0 - slope0) / slope2;
  if (eps_sq < -1e-14) return {};
  if (eps_sq <= 1e-14) return {0.0};
  return {std::sqrt(eps_sq)};
}

}  // namespace hermifp
