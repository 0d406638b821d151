#include "hermifp/problem.hpp"

#include <cmath>

#include "hermifp/poly.hpp"

namespace hermifp {

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::White: return "white";
    case NoiseKind::OrnsteinUhlenbeck: return "ou";
    case NoiseKind::Harmonic: return "harmonic";
    case NoiseKind::Bistable: return "bistable";
    case NoiseKind::AsymmetricBistable: return "asymmetric-bistable";
  }
  throw Error("unreachable noise kind");
}

NoiseKind noise_from_string(const std::string& s) {
  if (s == "white") return NoiseKind::White;
  if (s == "ou" || s == "ornstein-uhlenbeck") return NoiseKind::OrnsteinUhlenbeck;
  if (s == "harmonic") return NoiseKind::Harmonic;
  if (s == "bistable") return NoiseKind::Bistable;
  if (s == "asymmetric-bistable" || s == "ns") return NoiseKind::AsymmetricBistable;
  throw ConfigError("unknown noise kind '" + s +
                    "' (expected white, ou, harmonic, bistable, or asymmetric-bistable)");
}

int ProblemSpec::noise_dims() const {
  switch (noise) {
    case NoiseKind::White: return 0;
    case NoiseKind::Harmonic: return 2;
    default: return 1;
  }
}

double ProblemSpec::potential_value(double x) const { return poly_eval(potential, x); }

double ProblemSpec::potential_slope(double x) const {
  return poly_eval(poly_derivative(potential), x);
}

void ProblemSpec::validate() const {
  const int deg = poly_degree(potential);
  if (deg < 2) throw ConfigError("confining potential must have degree >= 2");
  if (deg % 2 != 0) throw ConfigError("confining potential must have even degree");
  if (potential[static_cast<std::size_t>(deg)] <= 0.0)
    throw ConfigError("confining potential must have a positive leading coefficient");
  if (!(theta >= 0.0)) throw ConfigError("interaction strength theta must be >= 0");
  if (!(beta > 0.0)) throw ConfigError("inverse temperature beta must be > 0");
  if (is_colored()) {
    if (!(epsilon > 0.0))
      throw ConfigError("colored noise requires a correlation parameter epsilon > 0");
    if (!std::isnan(zeta) && !(zeta > 0.0))
      throw ConfigError("noise normalisation zeta must be > 0 when given");
  }
}

std::vector<double> noise_potential_coeffs(NoiseKind kind, double shift) {
  switch (kind) {
    case NoiseKind::White:
      throw Error("white noise has no auxiliary potential");
    case NoiseKind::OrnsteinUhlenbeck:
      return {0.0, 0.0, 0.5};
    case NoiseKind::Harmonic:
      throw Error("harmonic noise has no scalar potential; use noise_weight_exponents");
    case NoiseKind::Bistable:
      return {0.0, 0.0, -0.5, 0.0, 0.25};
    case NoiseKind::AsymmetricBistable: {
      // (eta-a)^4/4 - (eta-a)^2/2 + (eta-a), expanded in powers of eta.
      const double a = shift;
      if (std::isnan(a)) throw Error("asymmetric-bistable noise needs its shift resolved");
      return {0.25 * a * a * a * a - 0.5 * a * a - a,  //
              -a * a * a + a + 1.0,                    //
              1.5 * a * a - 0.5,                       //
              -a,                                      //
              0.25};
    }
  }
  throw Error("unreachable noise kind");
}

std::vector<std::vector<double>> noise_weight_exponents(const ProblemSpec& spec) {
  switch (spec.noise) {
    case NoiseKind::White:
      return {};
    case NoiseKind::Harmonic:
      return {{0.0, 0.0, 0.5}, {0.0, 0.0, 0.5}};
    default:
      return {noise_potential_coeffs(spec.noise, spec.noise_shift)};
  }
}

}  // namespace hermifp
