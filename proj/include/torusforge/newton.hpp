#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "torusforge/geometry.hpp"
#include "torusforge/jets.hpp"
#include "torusforge/linearize.hpp"

namespace torusforge {

enum class Variant { moser, herman_dissipative, russmann };

struct NewtonConfig {
  double s = 0.5;       // initial analyticity width (diagnostic)
  double sigma = 0.25;  // total width budget (diagnostic)
  int max_iters = 30;
  double residual_tol = 1e-11;  // relative to |v|_0
  double divergence_guard = 10.0;
  double tail_tol = 1e-10;
  double eps0 = 0.1;
  bool pin_translation = false;
  std::vector<int> active;  // Russmann active actions
  bool trace = false;

  // sigma_k = sigma / 6 * 2^{-k}, s_{k+1} = s_k - 3 sigma_k
  double sigma_k(int k) const;
  double s_k(int k) const;
};

// (g, u, lambda) with v = g_* u + lambda at convergence.
struct NewtonState {
  Conjugacy g;
  VectorFieldJet u;
  CounterTerm lambda;

  static NewtonState initial(const VectorFieldJet& u0, Flavor flavor = Flavor::general);
};

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;
  double tail = 0.0;
  double mixed_defect = 0.0;
  double bound_ratio = 0.0;
  CounterTerm lambda;
};

struct Certificate {
  double exponent = 0.0;
  double constant = 0.0;
  int pairs = 0;
};

struct NewtonResult {
  NewtonState x;
  std::vector<double> residuals;  // relative, one per iterate including the last
  std::vector<double> tail_norms;
  std::optional<Certificate> certificate;
  int iterations = 0;
  std::vector<IterationRecord> trace;
};

// Relative residual floor below which pairs are excluded from the certificate fit.
inline constexpr double kCertificateFloor = 1e-14;

// Least-squares fit of log r_{k+1} = p log r_k + log c over pairs whose successor exceeds floor.
Certificate quadratic_certificate(std::span<const double> residuals, double floor = kCertificateFloor);

// g^*(v - lambda) - u, the right-hand side of the linearized equation.
VectorFieldJet pulled_back_defect(const NewtonState& x, const VectorFieldJet& v);
// |g^*(v - lambda) - u|_0 / |v|_0
double relative_residual(const NewtonState& x, const VectorFieldJet& v);

NewtonResult newton_solve(Variant variant, const VectorFieldJet& v, NewtonState x0, const NewtonConfig& cfg = {});

struct TwistResult {
  NewtonResult result;
  Eigen::MatrixXd A;
  double min_gap = 0.0;
  int outer_iterations = 0;
};

// Moves B into A until the normal form carries no linear counter-term (|B| <= b_tol).
TwistResult eliminate_twist_matrix(const VectorFieldJet& v, const VectorFieldJet& u0, const NewtonConfig& cfg = {},
                                   double b_tol = 1e-10, int max_outer = 20);
// Same, continuing from a given state.
TwistResult eliminate_twist_matrix(const VectorFieldJet& v, NewtonState x0, const NewtonConfig& cfg,
                                   double b_tol = 1e-10, int max_outer = 20);

struct TranslationResult {
  TwistResult twist;
  std::vector<double> c;  // action shift with beta(c) = 0
  std::vector<double> b;
  Eigen::VectorXd twist_singular_values;
  int outer_iterations = 0;
};

// v_c(theta, r) = v(theta, c + r)
VectorFieldJet shift_actions(const VectorFieldJet& v, std::span<const double> c);

// Finds c with beta = 0 for v_c, eliminating B on the way; returns v_c = g_* u + b d_r.
TranslationResult eliminate_translation_twist(const VectorFieldJet& v, const VectorFieldJet& u0,
                                              const NewtonConfig& cfg = {}, double beta_tol = 1e-10,
                                              int max_outer = 20);

}  // namespace torusforge
