#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "torusforge/fourier.hpp"

namespace torusforge {

// Frequencies alpha are read as the suspended flow (alpha, 1): every divisor k.alpha is reduced
// modulo the integer lattice of the extra time angle.
struct DiophantineParams {
  double gamma = 1e-2;
  double tau = 2.0;
  std::vector<double> alpha;
  std::vector<std::complex<double>> eigs;
};

struct ConditionReport {
  bool checked = false;
  bool ok = true;
  double worst_divisor = 0.0;  // divisor at the least favourable k (smallest divisor * weight)
  double worst_margin = 0.0;   // min over k of divisor * weight / gamma; ok iff >= 1
  std::vector<int> k;
  std::vector<int> l;
  int checked_up_to = 0;
};

struct DiophantineReport {
  ConditionReport dio1;  // |k.alpha| >= gamma / |k|^tau
  ConditionReport dio2;  // |i k.alpha + a_j| >= gamma / (1 + |k|)^tau
  ConditionReport dio3;  // |i k.alpha + l.a| >= gamma / (1 + |k|)^tau, |l| = 2
  bool ok() const { return dio1.ok && dio2.ok && dio3.ok; }
};

DiophantineReport check_diophantine(const DiophantineParams& p, int kmax);
// min over 0 < |k|_1 <= kmax of |k.alpha mod 1| |k|^tau.
double estimate_gamma(std::span<const double> alpha, double tau, int kmax);

// Hard floor on every divisor a solver is allowed to divide by.
inline constexpr double kDivisorFloor = 1e-13;
// Relative tolerance on averages that must vanish.
inline constexpr double kAverageTolerance = 1e-13;

// Eigendecomposition A = P diag(a) P^{-1}, computed once per problem.
struct Spectral {
  Eigen::MatrixXcd P;
  Eigen::MatrixXcd Pinv;
  Eigen::VectorXcd eigs;
  double condition = 1.0;
  static Spectral of(const Eigen::MatrixXd& A);
};

// L_alpha f = g; g must have zero average.
FourierSeries solve_tangent(const FourierSeries& g, std::span<const double> alpha);
// L_alpha f + A f = g componentwise in the eigenbasis.
std::vector<FourierSeries> solve_normal(std::span<const FourierSeries> g, std::span<const double> alpha,
                                        const Eigen::MatrixXd& A);
std::vector<FourierSeries> solve_normal(std::span<const FourierSeries> g, std::span<const double> alpha,
                                        const Spectral& A);
// L_alpha F + [A, F] = G; the conjugated diagonal of F has zero average.
SeriesMatrix solve_matrix(const SeriesMatrix& G, std::span<const double> alpha, const Eigen::MatrixXd& A);
SeriesMatrix solve_matrix(const SeriesMatrix& G, std::span<const double> alpha, const Spectral& A);

}  // namespace torusforge
