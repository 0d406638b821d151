#include "hermifp/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hermifp/artifacts.hpp"
#include "hermifp/asymptotics.hpp"
#include "hermifp/bifurcation.hpp"
#include "hermifp/common.hpp"
#include "hermifp/mc.hpp"
#include "hermifp/operators.hpp"
#include "hermifp/solver.hpp"

namespace hermifp {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fixed_decimals(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

/// The problem with noise constants filled in; the parsed config keeps the
/// user's values (possibly unset) so the artifact hash reflects the input.
ProblemSpec resolved_problem(const RunConfig& cfg) {
  ProblemSpec spec = cfg.problem;
  if (spec.is_colored()) resolve_noise_constants(spec);
  return spec;
}

std::vector<double> resolved_beta_grid(const RunConfig& cfg) {
  if (!cfg.beta_grid.empty()) return cfg.beta_grid;
  return {cfg.problem.beta};
}

/// Spectrum recentering and corrective drift for the double-well noise
/// models, mirroring what the self-consistency map applies internally: the
/// discrete noise generator of a non-quadratic potential has a slightly
/// negative ground eigenvalue (shifted away) and, when asymmetric, a
/// spurious equilibrium mean (cancelled by a drift unless disabled).
struct ColoredCorrections {
  double mu = 0.0;
  double shift = 0.0;
};

ColoredCorrections colored_corrections(const ProblemSpec& spec, const SpectralMapConfig& map) {
  ColoredCorrections out;
  if (spec.noise != NoiseKind::Bistable && spec.noise != NoiseKind::AsymmetricBistable)
    return out;
  const std::vector<double> v_eta = noise_potential_coeffs(spec.noise, spec.noise_shift);
  const int degree = map.degrees[1];
  const double sigma = map.sigma[1];
  out.shift = -noise_ground_mode(v_eta, degree, sigma).eigenvalue;
  if (map.drift_correction)
    out.mu = corrective_drift(v_eta, degree, sigma, spec.beta, spec.zeta);
  return out;
}

std::string density_block(const SpectralField& field, const RunConfig& cfg) {
  const int dims = field.basis->dims();
  if (dims <= 2) {
    std::vector<std::vector<double>> axes;
    for (int d = 0; d < dims; ++d)
      axes.push_back(linspace(cfg.grid_min[static_cast<std::size_t>(d)],
                              cfg.grid_max[static_cast<std::size_t>(d)],
                              cfg.grid_points[static_cast<std::size_t>(d)]));
    std::vector<double> values = evaluate_field_grid(field, axes);
    return grid_block(std::vector<double>(cfg.grid_min.begin(), cfg.grid_min.begin() + dims),
                      std::vector<double>(cfg.grid_max.begin(), cfg.grid_max.begin() + dims),
                      std::vector<int>(cfg.grid_points.begin(), cfg.grid_points.begin() + dims),
                      values);
  }
  // Three phase-space dimensions: store the spatial marginal.
  std::vector<double> axis = linspace(cfg.grid_min[0], cfg.grid_max[0], cfg.grid_points[0]);
  std::vector<double> values = marginal_on_grid(field, 0, axis);
  return grid_block({cfg.grid_min[0]}, {cfg.grid_max[0]}, {cfg.grid_points[0]}, values);
}

void write_density(const SpectralField& field, const RunConfig& cfg, const fs::path& out_dir,
                   std::ostream& log) {
  const fs::path path = out_dir / cfg.artifact_name("density", "density.txt");
  write_file_atomic(path, artifact_header(cfg) + density_block(field, cfg));
  log << "  wrote " << path.string() << "\n";
}

void write_moments(const SolveResult& res, const RunConfig& cfg, const fs::path& out_dir,
                   std::ostream& log) {
  std::string body = "t,m\n";
  for (std::size_t i = 0; i < res.times.size(); ++i)
    body += csv_row({format_double(res.times[i]), format_double(res.moments[i])});
  const fs::path path = out_dir / cfg.artifact_name("moments", "moments.csv");
  write_file_atomic(path, artifact_header(cfg) + body);
  log << "  wrote " << path.string() << "\n";
}

void write_summary(const SolveResult& res, const std::string& eigen_cell, const RunConfig& cfg,
                   const fs::path& out_dir, std::ostream& log) {
  std::string body = "mean,mass,residual,steady,iterations,smallest_eigenvalue\n";
  body += csv_row({format_double(res.mean), format_double(field_mass(res.field)),
                   format_double(res.residual), res.steady ? "true" : "false",
                   std::to_string(res.iterations), eigen_cell});
  const fs::path path = out_dir / cfg.artifact_name("summary", "summary.csv");
  write_file_atomic(path, artifact_header(cfg) + body);
  log << "  wrote " << path.string() << "\n";
}

// --- solve-linear / solve-mckean -------------------------------------------

void run_solve(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const bool mckean = cfg.command == "solve-mckean";
  ProblemSpec spec = resolved_problem(cfg);
  Stopwatch assemble_sw;
  BasisPtr basis = build_adapted_basis(spec, cfg.map.shape, cfg.map.degrees, cfg.map.sigma,
                                       cfg.map.quad_degree, cfg.map.x_weight);
  const ColoredCorrections corr =
      spec.is_colored() ? colored_corrections(spec, cfg.map) : ColoredCorrections{};
  log << "  basis size " << basis->size() << ", assembled in "
      << fixed_decimals(assemble_sw.seconds(), 3) << " s\n";

  Stopwatch solve_sw;
  SolveResult res = [&] {
    if (mckean) {
      MckeanSystem sys = build_mckean_system(spec, basis, corr.mu, corr.shift);
      SpectralField rho0 = gaussian_start(spec, basis, cfg.init_mean, cfg.init_stddev);
      if (cfg.steady) {
        SolverConfig sc = cfg.solver_config();
        sc.scheme = TimeScheme::SemiImplicit;
        return steady_state_mckean(sys, rho0, sc);
      }
      return integrate_mckean(sys, rho0, cfg.solver_config());
    }
    OperatorMatrix op =
        spec.is_colored()
            ? colored_operator(spec, cfg.frozen_mean, *basis, corr.mu, corr.shift)
            : white_mckean_operator(spec, cfg.frozen_mean, *basis);
    if (cfg.steady) return steady_state_linear(op, basis, cfg.map.steady_tol);
    SpectralField rho0 = gaussian_start(spec, basis, cfg.init_mean, cfg.init_stddev);
    return integrate_linear(op, rho0, cfg.solver_config());
  }();
  log << "  " << (cfg.steady ? "steady state" : "transient") << " finished in "
      << fixed_decimals(solve_sw.seconds(), 3) << " s (mean "
      << format_double(res.mean) << ", residual " << format_double(res.residual) << ")\n";

  if (cfg.steady) {
    std::string eigen_cell;
    if (cfg.eigen_diagnostic) {
      Stopwatch eig_sw;
      const Eigen::SparseMatrix<double> m =
          mckean ? build_mckean_system(spec, basis, corr.mu, corr.shift).at_mean(res.mean)
                 : (spec.is_colored()
                        ? colored_operator(spec, cfg.frozen_mean, *basis, corr.mu, corr.shift)
                        : white_mckean_operator(spec, cfg.frozen_mean, *basis))
                       .mat;
      eigen_cell = format_double(stationary_eigenvalue_magnitude(m));
      log << "  eigenvalue diagnostic " << eigen_cell << " in "
          << fixed_decimals(eig_sw.seconds(), 3) << " s\n";
    }
    write_summary(res, eigen_cell, cfg, out_dir, log);
  } else {
    write_moments(res, cfg, out_dir, log);
  }
  write_density(res.field, cfg, out_dir, log);
}

// --- self-consistency -------------------------------------------------------

void run_self_consistency(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  SelfConsistencyMap map(cfg.backend, cfg.problem, cfg.map);
  const double beta = cfg.problem.beta;
  Stopwatch sw;
  std::vector<double> roots =
      find_fixed_points(map, beta, cfg.scan_min, cfg.scan_max, cfg.scan_grid);
  std::string body = "beta,m,stability\n";
  for (double m : roots) {
    const Stability st = classify_stability(map, m, beta);
    body += csv_row({format_double(beta), format_double(m), to_string(st)});
  }
  log << "  " << roots.size() << " fixed point(s) at beta = " << format_double(beta) << " in "
      << fixed_decimals(sw.seconds(), 3) << " s\n";
  const fs::path path = out_dir / cfg.artifact_name("fixed_points", "fixed_points.csv");
  write_file_atomic(path, artifact_header(cfg) + body);
  log << "  wrote " << path.string() << "\n";
}

// --- bifurcate ---------------------------------------------------------------

void run_bifurcate(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const fs::path path = out_dir / cfg.artifact_name("branch", "branch.csv");
  if (fs::exists(path)) {
    try {
      ArtifactFile af = read_artifact(path);
      if (af.hash == cfg.hash && !af.payload.empty() && af.payload.back() == "# complete") {
        log << "  " << path.string() << " is complete for this config; nothing to do\n";
        return;
      }
    } catch (const IoError&) {
      log << "  existing " << path.string() << " is unreadable; recomputing\n";
    }
  }

  const double seed_beta = std::isnan(cfg.seed_beta) ? cfg.beta_max : cfg.seed_beta;
  if (seed_beta < cfg.beta_min || seed_beta > cfg.beta_max)
    throw ConfigError("[continuation] seed_beta must lie in [beta_min, beta_max]");
  SelfConsistencyMap map(cfg.backend, cfg.problem, cfg.map);

  Stopwatch scan_sw;
  std::vector<double> roots =
      find_fixed_points(map, seed_beta, cfg.scan_min, cfg.scan_max, cfg.scan_grid);
  if (roots.empty())
    throw SolverError("no fixed points found at the continuation seed beta = " +
                      format_double(seed_beta));
  log << "  " << roots.size() << " seed root(s) at beta = " << format_double(seed_beta)
      << " in " << fixed_decimals(scan_sw.seconds(), 3) << " s\n";

  std::string body = "beta,m,stability,backend,epsilon,model\n";
  for (std::size_t k = 0; k < roots.size(); ++k) {
    Stopwatch branch_sw;
    BifurcationBranch br =
        continue_branch(map, seed_beta, roots[k], cfg.beta_min, cfg.beta_max, cfg.control);
    body += "# branch " + std::to_string(k) + "\n";
    for (const BranchPoint& p : br.points)
      body += csv_row({format_double(p.beta), format_double(p.m), to_string(p.stability),
                       to_string(br.backend), format_double(br.epsilon),
                       to_string(br.model)});
    if (br.truncated) body += "# truncated: " + br.diagnostic + "\n";
    log << "  branch " << k << " from m = " << format_double(roots[k]) << ": "
        << br.points.size() << " points in " << fixed_decimals(branch_sw.seconds(), 3) << " s"
        << (br.truncated ? " (truncated: " + br.diagnostic + ")" : "") << "\n";
    if (auto pf = pitchfork_locus(br))
      log << "  branch " << k << " pitchfork near beta = " << format_double(*pf) << "\n";
  }
  body += "# complete\n";
  write_file_atomic(path, artifact_header(cfg) + body);
  log << "  wrote " << path.string() << "\n";
}

// --- mc ----------------------------------------------------------------------

void run_mc(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  ProblemSpec spec = resolved_problem(cfg);
  const std::vector<double> betas = resolved_beta_grid(cfg);
  if (cfg.mc.record_trajectory && betas.size() > 1)
    throw ConfigError("trajectory recording needs a single beta, not a beta_grid");

  const fs::path path = out_dir / cfg.artifact_name("sweep", "mc.csv");
  const std::string header = artifact_header(cfg);
  const std::string columns = "beta,m_hat,std_error";

  std::vector<std::string> rows;
  std::size_t start = 0;
  if (fs::exists(path)) {
    bool resumable = false;
    try {
      ArtifactFile af = read_artifact(path);
      resumable = af.hash == cfg.hash && !af.payload.empty() && af.payload[0] == columns;
      if (resumable) {
        for (std::size_t k = 1; k < af.payload.size() && start < betas.size(); ++k) {
          const std::string& line = af.payload[k];
          if (line.rfind(format_double(betas[start]) + ",", 0) != 0) break;
          rows.push_back(line);
          ++start;
        }
      }
    } catch (const IoError&) {
      resumable = false;
    }
    if (resumable)
      log << "  resuming " << path.string() << ": " << start << "/" << betas.size()
          << " points already done\n";
    else
      log << "  existing " << path.string() << " does not match this config; recomputing\n";
  }
  if (start == betas.size()) {
    log << "  all " << betas.size() << " point(s) already complete; nothing to do\n";
    return;
  }

  auto flush = [&] {
    std::string body = columns + "\n";
    for (const std::string& row : rows) body += row + "\n";
    write_file_atomic(path, header + body);
  };

  if (cfg.threads > 1) {
    if (start > 0)
      log << "  parallel sweep ignores the completed prefix; recomputing all points\n";
    rows.clear();
    Stopwatch sw;
    std::vector<SweepPoint> points = sweep_beta(spec, betas, cfg.mc, cfg.threads);
    log << "  swept " << betas.size() << " point(s) on " << cfg.threads << " threads in "
        << fixed_decimals(sw.seconds(), 3) << " s\n";
    for (const SweepPoint& p : points) {
      if (!p.ok) {
        flush();
        throw SolverError("mc point beta = " + format_double(p.beta) + " failed: " + p.error);
      }
      std::string row = csv_row({format_double(p.beta), format_double(p.estimate.m_hat),
                                 format_double(p.estimate.std_error)});
      row.pop_back();  // csv_row appends the newline; rows store bare lines
      rows.push_back(std::move(row));
    }
    flush();
  } else {
    for (std::size_t i = start; i < betas.size(); ++i) {
      ProblemSpec point = spec;
      point.beta = betas[i];
      McConfig mcc = cfg.mc;
      mcc.seed = sweep_seed(cfg.mc.seed, i);
      Stopwatch sw;
      McEstimate est = simulate(point, mcc);
      log << "  beta = " << format_double(point.beta) << ": m_hat = "
          << format_double(est.m_hat) << " +- " << format_double(est.std_error) << " in "
          << fixed_decimals(sw.seconds(), 3) << " s\n";
      std::string row = csv_row(
          {format_double(point.beta), format_double(est.m_hat), format_double(est.std_error)});
      row.pop_back();  // csv_row appends the newline; rows store bare lines
      rows.push_back(row);
      flush();
      if (cfg.mc.record_trajectory) {
        std::string body = "t,m_emp\n";
        for (const auto& [t, m] : est.trajectory)
          body += csv_row({format_double(t), format_double(m)});
        const fs::path tpath = out_dir / cfg.artifact_name("trajectory", "trajectory.csv");
        write_file_atomic(tpath, header + body);
        log << "  wrote " << tpath.string() << "\n";
      }
    }
  }
  log << "  wrote " << path.string() << "\n";
}

// --- zeta ----------------------------------------------------------------------

void run_zeta(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  struct Row {
    NoiseKind kind;
    int places;
  };
  const Row table[] = {{NoiseKind::OrnsteinUhlenbeck, 5},
                       {NoiseKind::Harmonic, 5},
                       {NoiseKind::Bistable, 3},
                       {NoiseKind::AsymmetricBistable, 3}};
  std::string body = "model,zeta\n";
  for (const Row& r : table) {
    Stopwatch sw;
    const double z = compute_zeta(r.kind);
    body += csv_row({to_string(r.kind), fixed_decimals(z, r.places)});
    log << "  zeta(" << to_string(r.kind) << ") = " << format_double(z) << " in "
        << fixed_decimals(sw.seconds(), 3) << " s\n";
  }
  const fs::path path = out_dir / cfg.artifact_name("zeta", "zeta.csv");
  write_file_atomic(path, artifact_header(cfg) + body);
  log << "  wrote " << path.string() << "\n";
}

// --- critical-epsilon ------------------------------------------------------------

void run_critical_epsilon(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  const std::vector<double> betas = resolved_beta_grid(cfg);
  std::string body = "beta_c,epsilon\n";
  for (double b : betas) {
    Stopwatch sw;
    std::vector<double> eps =
        critical_epsilon(b, cfg.problem.noise, cfg.problem.theta, cfg.problem.potential);
    if (eps.empty()) {
      body += "# beta_c = " + format_double(b) + ": no colored threshold\n";
      log << "  beta_c = " << format_double(b) << ": no colored threshold in "
          << fixed_decimals(sw.seconds(), 3) << " s\n";
    } else {
      body += csv_row({format_double(b), format_double(eps.back())});
      log << "  beta_c = " << format_double(b) << ": epsilon = " << format_double(eps.back())
          << " in " << fixed_decimals(sw.seconds(), 3) << " s\n";
    }
  }
  const fs::path path = out_dir / cfg.artifact_name("critical", "crit_eps.csv");
  write_file_atomic(path, artifact_header(cfg) + body);
  log << "  wrote " << path.string() << "\n";
}

// --- compare -----------------------------------------------------------------------

void run_compare(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  ProblemSpec spec = resolved_problem(cfg);
  const std::vector<double> betas = resolved_beta_grid(cfg);
  SelfConsistencyMap spectral(MapBackend::SpectralLinear, spec, cfg.map);
  SelfConsistencyMap asymptotic(MapBackend::AsymptoticOU, spec, cfg.map);

  auto largest_root = [&](SelfConsistencyMap& map, double beta, const char* label) {
    std::vector<double> roots =
        find_fixed_points(map, beta, cfg.scan_min, cfg.scan_max, cfg.scan_grid);
    if (roots.empty())
      throw SolverError(std::string("no ") + label +
                        " fixed point at beta = " + format_double(beta));
    double best = roots.front();
    for (double r : roots) best = std::max(best, r);
    return best;
  };

  std::string body = "beta,m_spectral,m_asymptotic,m_mc,mc_std_error\n";
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const double b = betas[i];
    Stopwatch sw;
    const double m_spec = largest_root(spectral, b, "spectral");
    const double m_asym = largest_root(asymptotic, b, "asymptotic");
    ProblemSpec point = spec;
    point.beta = b;
    McConfig mcc = cfg.mc;
    mcc.seed = sweep_seed(cfg.mc.seed, i);
    McEstimate est = simulate(point, mcc);
    body += csv_row({format_double(b), format_double(m_spec), format_double(m_asym),
                     format_double(std::abs(est.m_hat)), format_double(est.std_error)});
    log << "  beta = " << format_double(b) << ": spectral " << format_double(m_spec)
        << ", asymptotic " << format_double(m_asym) << ", mc "
        << format_double(std::abs(est.m_hat)) << " +- " << format_double(est.std_error)
        << " in " << fixed_decimals(sw.seconds(), 3) << " s\n";
  }
  const fs::path path = out_dir / cfg.artifact_name("compare", "compare.csv");
  write_file_atomic(path, artifact_header(cfg) + body);
  log << "  wrote " << path.string() << "\n";
}

}  // namespace

void run_command(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec && !fs::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  log << "hermifp " << cfg.command << " (config 0x" << hex64(cfg.hash) << ")\n";
  Stopwatch total;
  if (cfg.command == "solve-linear" || cfg.command == "solve-mckean") {
    run_solve(cfg, out_dir, log);
  } else if (cfg.command == "self-consistency") {
    run_self_consistency(cfg, out_dir, log);
  } else if (cfg.command == "bifurcate") {
    run_bifurcate(cfg, out_dir, log);
  } else if (cfg.command == "mc") {
    run_mc(cfg, out_dir, log);
  } else if (cfg.command == "zeta") {
    run_zeta(cfg, out_dir, log);
  } else if (cfg.command == "critical-epsilon") {
    run_critical_epsilon(cfg, out_dir, log);
  } else if (cfg.command == "compare") {
    run_compare(cfg, out_dir, log);
  } else {
    throw ConfigError("unknown command '" + cfg.command + "'");
  }
  log << "done in " << fixed_decimals(total.seconds(), 3) << " s\n";
}

int run_with_exit_code(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  try {
    run_command(cfg, out_dir, log);
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    log << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    log << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace hermifp
