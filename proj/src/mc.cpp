#include "hermifp/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "hermifp/poly.hpp"

namespace hermifp {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kInitTag = 0x5DEECE66DULL;
constexpr std::uint64_t kPathTag = 0x2545F4914F6CDD1DULL;
constexpr double kTwoPi = 6.283185307179586;

// Stateless counter-based stream: draw i of stream `key` is a pure function
// of (key, i), so any evaluation order or thread layout yields identical
// numbers.
struct Stream {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  double uniform() { return (mix64(key + kGolden * ++counter) >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]: keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }
};

std::uint64_t stream_key(std::uint64_t seed, int particle, std::uint64_t tag) {
  return mix64(mix64(seed + kGolden * (static_cast<std::uint64_t>(particle) + 1)) ^ tag);
}

struct RejectionWindow {
  double lo = 0, hi = 0, v_min = 0;
};

RejectionWindow rejection_window(const std::vector<double>& v_eta) {
  RejectionWindow w;
  w.v_min = poly_eval(v_eta, 0.0);
  double x_min = 0.0;
  for (int i = -1600; i <= 1600; ++i) {
    const double x = 0.01 * i;
    const double v = poly_eval(v_eta, x);
    if (v < w.v_min) {
      w.v_min = v;
      x_min = x;
    }
  }
  w.lo = w.hi = x_min;
  while (poly_eval(v_eta, w.lo) - w.v_min < 40.0 && w.lo > -100.0) w.lo -= 0.1;
  while (poly_eval(v_eta, w.hi) - w.v_min < 40.0 && w.hi < 100.0) w.hi += 0.1;
  return w;
}

double sample_noise_equilibrium(Stream& s, const std::vector<double>& v_eta,
                                const RejectionWindow& w) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = w.lo + (w.hi - w.lo) * s.uniform();
    const double accept = std::exp(-(poly_eval(v_eta, x) - w.v_min));
    if (s.uniform() <= accept) return x;
  }
  throw SolverError("rejection sampling of the noise equilibrium did not terminate");
}

struct BatchAccumulator {
  std::vector<double> sums;
  std::vector<long> counts;

  explicit BatchAccumulator(int n_batches) : sums(n_batches, 0.0), counts(n_batches, 0) {}

  void add(int batch, double value) {
    sums[static_cast<std::size_t>(batch)] += value;
    ++counts[static_cast<std::size_t>(batch)];
  }

  std::pair<double, double> estimate() const {
    double total = 0;
    long n = 0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
      total += sums[b];
      n += counts[b];
    }
    const double mean = total / static_cast<double>(n);
    double var = 0;
    int used = 0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
      if (counts[b] == 0) continue;
      const double bm = sums[b] / static_cast<double>(counts[b]);
      var += (bm - mean) * (bm - mean);
      ++used;
    }
    if (used < 2) return {mean, 0.0};
    var /= static_cast<double>(used - 1);
    return {mean, std::sqrt(var / used)};
  }
};

}  // namespace

double default_mc_dt(const ProblemSpec& spec) {
  if (!spec.is_colored()) return 1e-3;
  return std::min(1e-3, 0.25 * spec.epsilon * spec.epsilon);
}

McEstimate simulate(const ProblemSpec& spec, const McConfig& cfg) {
  spec.validate();
  if (cfg.n_particles < 1) throw ConfigError("need at least one particle");
  if (cfg.n_batches < 2) throw ConfigError("batch-means error needs at least two batches");
  if (!(cfg.window > 0.0) || cfg.burn_in < 0.0)
    throw ConfigError("burn-in must be >= 0 and the averaging window positive");

  const double dt = cfg.dt > 0.0 ? cfg.dt : default_mc_dt(spec);
  const bool colored = spec.is_colored();
  const double eps = spec.epsilon;
  if (colored && !(dt <= 0.5 * eps * eps + 1e-15))
    throw ConfigError("colored-noise simulation needs dt <= eps^2/2 (the correlation time)");
  if (colored && std::isnan(spec.zeta))
    throw ConfigError("resolve the noise constants (zeta) before simulating colored noise");

  const std::vector<double> slope = poly_derivative(spec.potential);
  const double noise_amp_white = std::sqrt(2.0 / spec.beta * dt);
  const double kappa = colored ? (spec.zeta / eps) * std::sqrt(2.0 / spec.beta) : 0.0;
  const double inv_eps2 = colored ? 1.0 / (eps * eps) : 0.0;
  const double aux_amp = colored ? std::sqrt(2.0 * dt) / eps : 0.0;

  const bool has_aux_potential = spec.noise == NoiseKind::Bistable ||
                                 spec.noise == NoiseKind::AsymmetricBistable;
  std::vector<double> v_eta, v_eta_slope;
  RejectionWindow rejection;
  if (has_aux_potential) {
    v_eta = noise_potential_coeffs(spec.noise, spec.noise_shift);
    v_eta_slope = poly_derivative(v_eta);
    rejection = rejection_window(v_eta);
  }
  const bool harmonic = spec.noise == NoiseKind::Harmonic;

  const int np = cfg.n_particles;
  std::vector<double> x(static_cast<std::size_t>(np));
  std::vector<double> eta(colored ? static_cast<std::size_t>(np) : 0);
  std::vector<double> lam(harmonic ? static_cast<std::size_t>(np) : 0);
  std::vector<Stream> paths(static_cast<std::size_t>(np));

  for (int p = 0; p < np; ++p) {
    const int sp = (p + cfg.id_rotation) % np;
    Stream init{stream_key(cfg.seed, sp, kInitTag), 0};
    x[static_cast<std::size_t>(p)] = cfg.init_mean + cfg.init_stddev * init.normal();
    if (colored) {
      if (has_aux_potential)
        eta[static_cast<std::size_t>(p)] = sample_noise_equilibrium(init, v_eta, rejection);
      else
        eta[static_cast<std::size_t>(p)] = init.normal();
      if (harmonic) lam[static_cast<std::size_t>(p)] = init.normal();
    }
    paths[static_cast<std::size_t>(p)] = Stream{stream_key(cfg.seed, sp, kPathTag), 0};
  }

  const long total_steps = std::lround((cfg.burn_in + cfg.window) / dt);
  const long window_start = std::lround(cfg.burn_in / dt);
  const long window_steps = total_steps - window_start;
  if (window_steps < cfg.n_batches)
    throw ConfigError("averaging window too short for the requested number of batches");

  BatchAccumulator acc_m(cfg.n_batches), acc_x2(cfg.n_batches), acc_eta2(cfg.n_batches);
  McEstimate est;
  const long stride =
      std::max<long>(1, total_steps / std::max(1, cfg.trajectory_points));

  auto empirical = [&](const std::vector<double>& v) {
    double s = 0;
    for (double value : v) s += value;
    return s / static_cast<double>(np);
  };

  double mbar = empirical(x);
  if (cfg.record_trajectory) est.trajectory.emplace_back(0.0, mbar);

  for (long k = 0; k < total_steps; ++k) {
    for (int p = 0; p < np; ++p) {
      const std::size_t i = static_cast<std::size_t>(p);
      Stream& s = paths[i];
      const double xi = x[i];
      double drift = -poly_eval(slope, xi) - spec.theta * (xi - mbar);
      if (colored) {
        x[i] = xi + (drift + kappa * eta[i]) * dt;
        if (harmonic) {
          const double e = eta[i], l = lam[i];
          eta[i] = e + l * inv_eps2 * dt;
          lam[i] = l - (e + l) * inv_eps2 * dt + aux_amp * s.normal();
        } else if (has_aux_potential) {
          eta[i] += -poly_eval(v_eta_slope, eta[i]) * inv_eps2 * dt + aux_amp * s.normal();
        } else {
          eta[i] += -eta[i] * inv_eps2 * dt + aux_amp * s.normal();
        }
      } else {
        x[i] = xi + drift * dt + noise_amp_white * s.normal();
      }
    }

    mbar = empirical(x);
    const double t = static_cast<double>(k + 1) * dt;
    if (!std::isfinite(mbar))
      throw SolverError("non-finite particle state at step " + std::to_string(k + 1) +
                        " (t = " + std::to_string(t) + "); reduce dt");

    if (k + 1 > window_start) {
      const long s_in_window = k + 1 - window_start - 1;
      const int batch =
          static_cast<int>(s_in_window * cfg.n_batches / std::max<long>(1, window_steps));
      acc_m.add(batch, mbar);
      double x2 = 0;
      for (double v : x) x2 += v * v;
      acc_x2.add(batch, x2 / np);
      if (colored) {
        double e2 = 0;
        for (double v : eta) e2 += v * v;
        acc_eta2.add(batch, e2 / np);
      }
    }
    if (cfg.record_trajectory && (k + 1) % stride == 0)
      est.trajectory.emplace_back(t, mbar);
  }

  std::tie(est.m_hat, est.std_error) = acc_m.estimate();
  std::tie(est.x2_hat, est.x2_std_error) = acc_x2.estimate();
  if (colored) std::tie(est.eta2_hat, est.eta2_std_error) = acc_eta2.estimate();
  return est;
}

std::uint64_t sweep_seed(std::uint64_t master, std::size_t index) {
  return mix64(master + 0xB5AD4ECEDA1CE2A9ULL * (static_cast<std::uint64_t>(index) + 1));
}

std::vector<SweepPoint> sweep_beta(const ProblemSpec& tmpl, const std::vector<double>& betas,
                                   const McConfig& cfg, int threads) {
  if (betas.empty()) throw ConfigError("beta sweep needs at least one value");
  std::vector<SweepPoint> out(betas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= betas.size()) return;
      SweepPoint& point = out[i];
      point.beta = betas[i];
      try {
        ProblemSpec spec = tmpl;
        spec.beta = betas[i];
        McConfig local = cfg;
        local.seed = sweep_seed(cfg.seed, i);
        point.estimate = simulate(spec, local);
        point.ok = true;
      } catch (const std::exception& e) {
        point.ok = false;
        point.error = e.what();
      }
    }
  };
  const int n_threads = std::clamp<int>(threads, 1, static_cast<int>(betas.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace hermifp
