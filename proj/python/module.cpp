#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hermifp/asymptotics.hpp"
#include "hermifp/bifurcation.hpp"
#include "hermifp/common.hpp"
#include "hermifp/mc.hpp"
#include "hermifp/operators.hpp"
#include "hermifp/problem.hpp"
#include "hermifp/solver.hpp"

namespace py = pybind11;

namespace {

using namespace hermifp;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ProblemSpec make_spec(std::vector<double> potential, double theta, double beta,
                      const std::string& noise, double epsilon, double zeta,
                      double noise_shift) {
  ProblemSpec spec;
  spec.potential = std::move(potential);
  spec.theta = theta;
  spec.beta = beta;
  spec.noise = noise_from_string(noise);
  spec.epsilon = epsilon;
  spec.zeta = zeta;
  spec.noise_shift = noise_shift;
  spec.validate();
  return spec;
}

ProblemSpec resolved(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  if (out.is_colored()) resolve_noise_constants(out);
  return out;
}

SpectralMapConfig map_config(const std::vector<int>& degrees, const std::vector<double>& sigma) {
  SpectralMapConfig cfg;
  if (!degrees.empty()) cfg.degrees = degrees;
  if (!sigma.empty()) cfg.sigma = sigma;
  return cfg;
}

py::dict estimate_dict(const McEstimate& est) {
  py::dict d;
  d["m_hat"] = est.m_hat;
  d["std_error"] = est.std_error;
  d["x2_hat"] = est.x2_hat;
  d["x2_std_error"] = est.x2_std_error;
  d["eta2_hat"] = est.eta2_hat;
  d["eta2_std_error"] = est.eta2_std_error;
  d["trajectory"] = est.trajectory;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hermifp, m) {
  m.doc() = "Hermite spectral and interacting-particle methods for mean-field "
            "Fokker-Planck equations";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<SolverError>(m, "SolverError");

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def(py::init(&make_spec), py::arg("potential"), py::arg("theta") = 0.0,
           py::arg("beta") = 1.0, py::arg("noise") = "white", py::arg("epsilon") = 0.0,
           py::arg("zeta") = kNaN, py::arg("noise_shift") = kNaN)
      .def_readwrite("potential", &ProblemSpec::potential)
      .def_readwrite("theta", &ProblemSpec::theta)
      .def_readwrite("beta", &ProblemSpec::beta)
      .def_readwrite("epsilon", &ProblemSpec::epsilon)
      .def_readwrite("zeta", &ProblemSpec::zeta)
      .def_readwrite("noise_shift", &ProblemSpec::noise_shift)
      .def_property(
          "noise", [](const ProblemSpec& s) { return std::string(to_string(s.noise)); },
          [](ProblemSpec& s, const std::string& v) { s.noise = noise_from_string(v); })
      .def("dims", &ProblemSpec::dims)
      .def("is_colored", &ProblemSpec::is_colored)
      .def("__repr__", [](const ProblemSpec& s) {
        return "ProblemSpec(noise=" + std::string(to_string(s.noise)) +
               ", theta=" + format_double(s.theta) + ", beta=" + format_double(s.beta) + ")";
      });

  m.def(
      "zeta",
      [](const std::string& kind, int degree) {
        return compute_zeta(noise_from_string(kind), degree);
      },
      py::arg("kind"), py::arg("degree") = 60,
      "Kernel normalisation zeta = (2 int_0^inf K)^{-1/2} of a colored-noise model");
  m.def("alpha_shift", &compute_alpha_shift,
        "Centering shift of the asymmetric double-well noise potential");

  m.def(
      "white_R",
      [](double m_val, double beta, double theta, const std::vector<double>& potential) {
        return white_R(m_val, beta, theta, potential);
      },
      py::arg("m"), py::arg("beta"), py::arg("theta"), py::arg("potential"),
      "Exact white-noise self-consistency map R(m)");
  m.def(
      "free_energy",
      [](double m_val, double beta, double theta, const std::vector<double>& potential) {
        return free_energy(m_val, beta, theta, potential);
      },
      py::arg("m"), py::arg("beta"), py::arg("theta"), py::arg("potential"),
      "Free energy along the one-parameter Gaussian-tilt family");
  m.def(
      "approx_R",
      [](const std::string& kind, double m_val, double beta, double theta, double eps,
         const std::vector<double>& potential) {
        return approx_R(noise_from_string(kind), m_val, beta, theta, eps, potential);
      },
      py::arg("kind"), py::arg("m"), py::arg("beta"), py::arg("theta"), py::arg("eps"),
      py::arg("potential"), "Small-correlation-time expansion of the self-consistency map");
  m.def(
      "critical_epsilon",
      [](double beta_c, const std::string& kind, double theta,
         const std::vector<double>& potential) {
        return critical_epsilon(beta_c, noise_from_string(kind), theta, potential);
      },
      py::arg("beta_c"), py::arg("kind"), py::arg("theta"), py::arg("potential"),
      "Correlation-time parameters at which the colored critical beta equals beta_c");

  py::class_<SelfConsistencyMap>(m, "SelfConsistencyMap")
      .def(py::init([](const std::string& backend, const ProblemSpec& spec,
                       const std::vector<int>& degrees, const std::vector<double>& sigma) {
             return SelfConsistencyMap(backend_from_string(backend), spec,
                                       map_config(degrees, sigma));
           }),
           py::arg("backend"), py::arg("spec"), py::arg("degrees") = std::vector<int>{},
           py::arg("sigma") = std::vector<double>{})
      .def("__call__", &SelfConsistencyMap::operator(), py::arg("m"), py::arg("beta"))
      .def(
          "fixed_points",
          [](SelfConsistencyMap& self, double beta, double lo, double hi, int n_grid) {
            return find_fixed_points(self, beta, lo, hi, n_grid);
          },
          py::arg("beta"), py::arg("lo") = -2.0, py::arg("hi") = 2.0, py::arg("n_grid") = 101)
      .def("critical_beta",
           [](SelfConsistencyMap& self, double beta_lo, double beta_hi, double tol) {
             return critical_beta(self, beta_lo, beta_hi, tol);
           },
           py::arg("beta_lo"), py::arg("beta_hi"), py::arg("tol") = 1e-6);

  m.def(
      "simulate",
      [](const ProblemSpec& spec, int particles, double dt, double burn_in, double window,
         std::uint64_t seed, double init_mean, double init_stddev, int batches,
         bool trajectory, int trajectory_points) {
        McConfig cfg;
        cfg.n_particles = particles;
        cfg.dt = dt;
        cfg.burn_in = burn_in;
        cfg.window = window;
        cfg.seed = seed;
        cfg.init_mean = init_mean;
        cfg.init_stddev = init_stddev;
        cfg.n_batches = batches;
        cfg.record_trajectory = trajectory;
        cfg.trajectory_points = trajectory_points;
        return estimate_dict(simulate(resolved(spec), cfg));
      },
      py::arg("spec"), py::arg("particles") = 2000, py::arg("dt") = 0.0,
      py::arg("burn_in") = 50.0, py::arg("window") = 50.0, py::arg("seed") = 1,
      py::arg("init_mean") = 0.0, py::arg("init_stddev") = 1.0, py::arg("batches") = 20,
      py::arg("trajectory") = false, py::arg("trajectory_points") = 1000,
      "Ergodic average of the empirical mean of the interacting-particle system");

  m.def(
      "solve_steady",
      [](const ProblemSpec& spec_in, double mean, const std::vector<int>& degrees,
         const std::vector<double>& sigma) {
        ProblemSpec spec = resolved(spec_in);
        SpectralMapConfig cfg = map_config(degrees, sigma);
        BasisPtr basis = build_adapted_basis(spec, cfg.shape, cfg.degrees, cfg.sigma,
                                             cfg.quad_degree, cfg.x_weight);
        double mu = 0.0, shift = 0.0;
        if (spec.noise == NoiseKind::Bistable || spec.noise == NoiseKind::AsymmetricBistable) {
          const std::vector<double> v_eta =
              noise_potential_coeffs(spec.noise, spec.noise_shift);
          const int deg = basis->iset().max_degree(1);
          const double sg = basis->sigma(1);
          shift = -noise_ground_mode(v_eta, deg, sg).eigenvalue;
          mu = corrective_drift(v_eta, deg, sg, spec.beta, spec.zeta);
        }
        OperatorMatrix op = spec.is_colored()
                                ? colored_operator(spec, mean, *basis, mu, shift)
                                : white_mckean_operator(spec, mean, *basis);
        SolveResult res = steady_state_linear(op, basis);
        py::dict d;
        d["mean"] = res.mean;
        d["mass"] = field_mass(res.field);
        d["residual"] = res.residual;
        d["steady"] = res.steady;
        d["size"] = basis->size();
        return d;
      },
      py::arg("spec"), py::arg("mean") = 0.0, py::arg("degrees") = std::vector<int>{},
      py::arg("sigma") = std::vector<double>{},
      "Stationary state of the linear operator with the mean-field drift frozen at `mean`");
}
