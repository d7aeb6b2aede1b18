#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "torusforge/fourier.hpp"
#include "torusforge/jets.hpp"

namespace torusforge {

enum class Flavor { general, exact_symplectic, symplectic };

// g(theta, r) = (phi(theta), R0(theta) + R1(theta) r) with phi = id + v and phi(0) = 0.
// Symplectic flavors keep (S, xi) authoritative; R0 = phi'^{-T}(dS + xi), R1 = phi'^{-T}.
struct Conjugacy {
  Flavor flavor = Flavor::general;
  int n = 0;
  int m = 0;
  std::vector<FourierSeries> phi_minus_id;
  std::vector<FourierSeries> R0;
  SeriesMatrix R1;
  FourierSeries S;
  std::vector<double> xi;

  static Conjugacy identity(int n, int m, int order, Flavor flavor = Flavor::general);
  // Builds a symplectic-flavor map (exact_symplectic when xi is empty or zero is requested).
  static Conjugacy from_generator(std::vector<FourierSeries> phi_minus_id, FourierSeries S,
                                  std::vector<double> xi, Flavor flavor = Flavor::symplectic);

  int order() const;
  // Recomputes R0, R1 from (phi, S, xi) for the symplectic flavors.
  void refresh();
  // max(|v|_0, |R0|_0, |R1 - I|_0), each a max over rows of summed l1 norms.
  double distance_from_identity() const;

  std::vector<double> evaluate(std::span<const double> theta, std::span<const double> r) const;
  Eigen::MatrixXd jacobian(std::span<const double> theta, std::span<const double> r) const;
};

// lambda = (beta, b + B r). Kernel constraints A b = 0 and [A, B] = 0 are the caller's business;
// check() reports the violation.
struct CounterTerm {
  std::vector<double> beta;
  std::vector<double> b;
  Eigen::MatrixXd B;

  static CounterTerm zero(int n, int m);
  VectorFieldJet field(int order) const;
  double norm() const;  // max of |beta|_inf, |b|_inf, |B|_inf
  double kernel_violation(const Eigen::MatrixXd& A) const;
  CounterTerm& operator+=(const CounterTerm& o);
};

// psi - id for psi = (id + v)^{-1}, by fixed-point iteration on the oversampled grid.
std::vector<FourierSeries> invert_torus_map(std::span<const FourierSeries> v);
Conjugacy invert_conjugacy(const Conjugacy& g);
// (g2 o g1), flattened to series.
Conjugacy compose(const Conjugacy& g2, const Conjugacy& g1);

// (g' u) o g^{-1}
VectorFieldJet push_forward(const Conjugacy& g, const VectorFieldJet& u);
// g'^{-1} (w o g); the deformed norm |w|_{g,s} is pull_back(g, w).norm(s).
VectorFieldJet pull_back(const Conjugacy& g, const VectorFieldJet& w);
// [f, h] = Dh f - Df h, truncated at degree 2.
VectorFieldJet lie_bracket(const VectorFieldJet& f, const VectorFieldJet& h);

// (d_r H, -d_theta H - eta r) for a scalar Hamiltonian jet on T^n x R^n.
VectorFieldJet hamiltonian_field(const RJet& H, double eta, std::span<const double> alpha = {});

struct DissipativeHamiltonian {
  RJet H;
  double eta = 0.0;
  std::vector<double> translation;  // constant d_r drift, eta xi; zero for exact-symplectic g
  VectorFieldJet field() const;
};

// Transport of X_H - eta r d_r by a (exact-)symplectic g, psi = phi^{-1}:
// H o g^{-1} - eta (S o psi + xi.(psi - id)), plus the drift eta xi d_r.
DissipativeHamiltonian push_forward_ham_dissipative(const Conjugacy& g, const RJet& H, double eta);

}  // namespace torusforge
