#pragma once

#include <Eigen/Dense>
#include <vector>

#include "torusforge/fourier.hpp"
#include "torusforge/geometry.hpp"
#include "torusforge/jets.hpp"

namespace torusforge {

// Infinitesimal conjugacy gdot(theta, r) = (phi(theta), R0(theta) + R1(theta) r) in the frame of g.
// Symplectic solvers also fill the generator: R0 = dS + xi and R1 = -phi'^T.
struct InfinitesimalConjugacy {
  std::vector<FourierSeries> phi;
  std::vector<FourierSeries> R0;
  SeriesMatrix R1;
  FourierSeries S;
  std::vector<double> xi;

  VectorFieldJet field() const;
  double norm() const;
};

// Solution of [u, gdot] + delta_u + g^*(delta_lambda) = vdot, vdot = g^*(v - lambda) - u.
struct LinearizedSolution {
  InfinitesimalConjugacy gdot;
  VectorFieldJet delta_u;       // free of the mixed jet by construction
  CounterTerm delta_lambda;
  double residual = 0.0;        // mixed-jet defect removed from delta_u
  double torsion_det = 0.0;     // Russmann: det <Q (eta M + I)> on the active block
  double bound_ratio = 0.0;     // max(|gdot|, |delta_u|, |delta_lambda|) / |vdot|
};

struct LinearizeOptions {
  // Moser: absorb the whole order-0 normal average into b and keep <R0dot> = 0.
  bool pin_translation = false;
  // Moser: neighbourhood gate on |g - id|_0.
  double eps0 = 0.1;
  // Russmann: action components allowed to translate (empty: all).
  std::vector<int> active;
  // Herman: relative tolerance on the automatically satisfied equations.
  double class_tol = 1e-10;
};

// Moser class U(alpha, A); delta_v = v - g_*u - lambda in the original frame.
LinearizedSolution solve_linearized_moser(const Conjugacy& g, const VectorFieldJet& u,
                                          const VectorFieldJet& delta_v, const LinearizeOptions& opts = {});
// Same with the right-hand side already pulled back by g.
LinearizedSolution solve_linearized_moser_pulled(const Conjugacy& g, const VectorFieldJet& u,
                                                 const VectorFieldJet& vdot, const LinearizeOptions& opts = {});

// Dissipative Hamiltonian class, exact-symplectic g, lambda = (beta, 0); vdot pulled back.
LinearizedSolution solve_linearized_herman_dissipative(const Conjugacy& g, const VectorFieldJet& u, double eta,
                                                       const VectorFieldJet& vdot, const LinearizeOptions& opts = {});

// Translated torus, symplectic g, lambda = (0, b); vdot pulled back.
LinearizedSolution solve_linearized_russmann(const Conjugacy& g, const VectorFieldJet& u, double eta,
                                             const VectorFieldJet& vdot, const LinearizeOptions& opts = {});

// g + g' gdot, kept in the flavor of g (symplectic flavors update the generator).
Conjugacy apply_update(const Conjugacy& g, const InfinitesimalConjugacy& gdot);

// Null space of A and of B -> AB - BA, as column bases.
Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& A);
std::vector<Eigen::MatrixXd> commutant_basis(const Eigen::MatrixXd& A);

}  // namespace torusforge
