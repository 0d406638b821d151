#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hermifp/operators.hpp"
#include "hermifp/problem.hpp"
#include "hermifp/solver.hpp"

namespace hermifp {

/// Exact white-noise self-consistency map
///   R(m) = Z(m)^{-1} int x exp(-beta V_eff(x; m)) dx,
///   V_eff(x; m) = V(x) + theta (x - m)^2 / 2,
/// by adaptive quadrature on an interval where the relative integrand tail
/// is below 1e-14.  Fixed points m = R(m) are the mean-field equilibria.
double white_R(double m, double beta, double theta, std::span<const double> potential);

/// Free energy of the one-parameter family rho_m,
///   F(m) = -beta^{-1} ln Z(m) - (theta/2) (R(m) - m)^2;
/// its stationary points are exactly the fixed points of R, and
/// dF/dm = -theta R'(m) (R(m) - m) carries the stability information.
double free_energy(double m, double beta, double theta, std::span<const double> potential);

/// Backends for evaluating the self-consistency map R(m, beta):
///   WhiteExact     — adaptive quadrature of the white-noise formula;
///   AsymptoticOU   — small-correlation-time expansion (OU model only);
///   SpectralLinear — first moment of the stationary state of the linear
///                    Galerkin operator with the mean frozen at m;
///   SpectralMcKean — mean reached by marching the nonlinear Galerkin
///                    system to stationarity from a Gaussian start centred
///                    at m (its fixed points are the stable equilibria).
enum class MapBackend { WhiteExact, AsymptoticOU, SpectralLinear, SpectralMcKean };

const char* to_string(MapBackend backend);
MapBackend backend_from_string(const std::string& name);

/// Discretisation choices for the spectral backends.
struct SpectralMapConfig {
  IndexSet::Shape shape = IndexSet::Shape::Rectangle;
  std::vector<int> degrees = {20};  // per dimension; a single entry is replicated
  std::vector<double> sigma;        // per-dimension scales; empty = all ones
  int quad_degree = -1;             // < 0: max degree + weight degree + 10
  XWeight x_weight = XWeight::Boltzmann;
  double steady_tol = 1e-9;
  /// Cancel the spurious mean of the discrete noise equilibrium of the
  /// asymmetric noise model by the corrective drift.
  bool drift_correction = true;
  /// Width of the Gaussian start used by the McKean backend.
  double init_stddev = 1.0;
  /// Stepper for the McKean backend (semi-implicit steady-state marching).
  SolverConfig mckean_solver{.scheme = TimeScheme::SemiImplicit, .dt = 1.0,
                             .max_steps = 50'000};
};

/// A self-consistency map with a fixed problem and backend, evaluated at
/// varying (m, beta).  Spectral backends rebuild their basis when beta
/// changes (the Boltzmann weight depends on it) and warm-start each steady
/// solve from the previous one.  Instances are stateful and must not be
/// shared across threads; parallel diagrams construct one map each.
class SelfConsistencyMap {
 public:
  /// Resolves the noise constants (zeta, asymmetric shift) if the spec
  /// leaves them unset.  WhiteExact rejects colored noise; AsymptoticOU
  /// requires the OU model.
  SelfConsistencyMap(MapBackend backend, ProblemSpec spec, SpectralMapConfig cfg = {});

  MapBackend backend() const { return backend_; }
  const ProblemSpec& spec() const { return spec_; }
  const SpectralMapConfig& config() const { return cfg_; }

  double operator()(double m, double beta);

 private:
  void ensure_basis(double beta);
  double spectral_linear(double m);
  double spectral_mckean(double m);

  MapBackend backend_;
  ProblemSpec spec_;
  SpectralMapConfig cfg_;
  BasisPtr basis_;
  double basis_beta_ = std::numeric_limits<double>::quiet_NaN();
  double drift_mu_ = 0.0;        // corrective drift of the asymmetric model
  double spectrum_shift_ = 0.0;  // recentres the discrete noise spectrum
  Eigen::VectorXd warm_;
};

/// Fixed points m = R(m, beta) on [lo, hi]: sign-change bracketing on a
/// uniform grid, refined by bisection to 1e-8 and merged within 1e-6.
std::vector<double> find_fixed_points(SelfConsistencyMap& map, double beta, double lo = -2.0,
                                      double hi = 2.0, int n_grid = 101);

enum class Stability { Stable, Unstable, Marginal };

const char* to_string(Stability s);

/// Slope classification of a fixed point: unstable iff the centered
/// difference of R(m) - m at the root is positive; |slope| < 1e-6 reports
/// marginal (the bifurcation locus itself).
Stability classify_stability(SelfConsistencyMap& map, double m_root, double beta,
                             double step = 1e-4);

struct ContinuationControl {
  double initial_step = 0.05;
  double min_step = 1e-5;
  double max_step = 0.2;
  double corrector_tol = 1e-8;
  int max_corrector_iterations = 8;
  int max_points = 2000;
  double derivative_step = 1e-4;
};

struct BranchPoint {
  double beta = 0.0;
  double m = 0.0;
  Stability stability = Stability::Stable;
  double slope = 0.0;      // d(R - m)/dm at the point
  double step = 0.0;       // arclength step that produced the point
  double residual = 0.0;   // |R(m, beta) - m| at acceptance
  bool pitchfork = false;  // trivial branch and |dR/dm - 1| < 1e-4
};

struct BifurcationBranch {
  MapBackend backend = MapBackend::WhiteExact;
  NoiseKind model = NoiseKind::White;
  double epsilon = 0.0;
  std::vector<BranchPoint> points;
  bool truncated = false;  // corrector divergence at the minimal step
  std::string diagnostic;
};

/// Moore–Penrose predictor–corrector continuation of R(m, beta) - m = 0
/// from a converged fixed point (beta0, m0) across [beta_lo, beta_hi]; the
/// branch is traced in both directions from the start and returned ordered
/// by arclength.  The scalar residual makes the Moore–Penrose step a
/// least-squares normal update; derivatives use centered differences.
BifurcationBranch continue_branch(SelfConsistencyMap& map, double beta0, double m0,
                                  double beta_lo, double beta_hi,
                                  const ContinuationControl& ctl = {});

/// beta at which the trivial-branch slope dR/dm|0 crosses 1, interpolated
/// between consecutive continuation points of the branch; empty when the
/// branch never crosses the pitchfork.
std::optional<double> pitchfork_locus(const BifurcationBranch& branch);

/// Critical inverse temperature: bisection on dR/dm(m0; beta) - 1 over
/// [beta_lo, beta_hi] (centered difference, step 1e-4).  Throws when the
/// slope does not cross 1 inside the interval.
double critical_beta(SelfConsistencyMap& map, double beta_lo, double beta_hi,
                     double tol = 1e-6, double m0 = 0.0);

/// Correlation-time parameters eps >= 0 at which the expanded map
/// R0 + eps^2 R2 has unit slope at m = 0 for the given inverse temperature:
/// nonnegative real roots of dR0/dm + eps^2 dR2/dm = 1 (centered numerical
/// differentiation, step 1e-4).  Available for the OU model; the list is
/// empty when no real root exists (beta_c above the white-noise critical
/// value).
std::vector<double> critical_epsilon(double beta_c, NoiseKind kind, double theta,
                                     std::span<const double> potential);

}  // namespace hermifp
