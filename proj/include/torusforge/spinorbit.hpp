#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "torusforge/errors.hpp"
#include "torusforge/fourier.hpp"
#include "torusforge/jets.hpp"
#include "torusforge/newton.hpp"

namespace torusforge {

// theta'' + eta (theta' - nu) + eps d_theta f(theta, t) = 0 on T^2 x R^2 with r_1 = theta' - alpha and
// theta_2 = t.
struct SpinOrbitProblem {
  double alpha = 0.0;
  double eta = 0.1;
  double nu = 0.0;
  double epsilon = 0.0;
  FourierSeries potential;  // f(theta_1, theta_2); invalid means the default potential
  int order = 32;
  NewtonConfig newton;

  // cos(theta_1) + cos(theta_1 - theta_2) / 2
  static FourierSeries default_potential(int order);
  FourierSeries f() const { return potential.valid() ? potential : default_potential(order); }
  std::vector<double> frequency() const { return {alpha, 1.0}; }
};

// Tangent (alpha + r_1, 1), normal (-eta r_1 + eta (nu - alpha) - eps d_1 f, -eta r_2 - eps d_2 f).
VectorFieldJet build_extended_field(const SpinOrbitProblem& p);
// The eps = 0, nu = alpha field, carrying the class (alpha, 1), A = -eta I.
VectorFieldJet reference_field(const SpinOrbitProblem& p);

struct TranslatedTorus {
  NewtonResult result;
  double b = 0.0;       // spin-action translation
  double b_time = 0.0;  // time-action translation, vanishes at the solution
};

TranslatedTorus translated_torus_normal_form(const SpinOrbitProblem& p);

struct NuElimination {
  double nu_star = 0.0;
  double b_residual = 0.0;
  TranslatedTorus torus;
  int evaluations = 0;
};

inline constexpr double kMinDissipation = 1e-3;

// Secant in nu seeded at alpha with slope eta, guarded by a widening bracket around alpha.
NuElimination eliminate_nu(const SpinOrbitProblem& p, double b_tol = 1e-11, int max_evaluations = 40);

struct AttractorCurvePoint {
  double eta = 0.0;
  double epsilon = 0.0;
  double nu_star = 0.0;
  double b_residual = 0.0;
  int newton_iters = 0;
  double certificate_exponent = 0.0;  // NaN when the run was too short to fit
  std::optional<Conjugacy> embedding;
  std::optional<ErrorKind> error;
  std::string message;
};

// One point per eta (curve) or per (epsilon, eta), row-major in epsilon (surface). Failures are
// recorded per point. jobs <= 1 runs serially; the order of the result never depends on jobs.
std::vector<AttractorCurvePoint> sweep_curve(const SpinOrbitProblem& base, std::span<const double> eta_grid,
                                             int jobs = 1, bool keep_embedding = false);
std::vector<AttractorCurvePoint> sweep_surface(const SpinOrbitProblem& base, std::span<const double> epsilon_grid,
                                               std::span<const double> eta_grid, int jobs = 1,
                                               bool keep_embedding = false);

void write_sweep_csv(std::ostream& os, std::span<const AttractorCurvePoint> points);

}  // namespace torusforge
