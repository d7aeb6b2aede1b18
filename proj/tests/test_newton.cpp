#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "torusforge/errors.hpp"
#include "torusforge/newton.hpp"
#include "torusforge/verify.hpp"

using namespace torusforge;

namespace {

constexpr int kOrder = 24;

VectorFieldJet straight(double A, double q = 0.0, int K = kOrder) {
  auto u = VectorFieldJet::straight(std::vector<double>{tfs::golden()}, Eigen::MatrixXd::Constant(1, 1, A), K);
  if (q != 0.0) u.tangent[0].linear(0).set_average(q);
  return u;
}

// u0 + eps (cos theta, sin theta (1 + r))
VectorFieldJet perturbed(const VectorFieldJet& u0, double eps) {
  const int K = u0.order();
  VectorFieldJet v = u0;
  v.tangent[0].constant_term() += FourierSeries::from_modes(1, K, {{{1}, cplx(0.5 * eps, 0.0)}});
  const auto sine = FourierSeries::from_modes(1, K, {{{1}, cplx(0.0, -0.5 * eps)}});
  v.normal[0].constant_term() += sine;
  v.normal[0].linear(0) += sine;
  return v;
}

double state_gap(const NewtonState& a, const NewtonState& b) {
  double d = std::abs(a.lambda.beta[0] - b.lambda.beta[0]);
  d = std::max(d, std::abs(a.lambda.B(0, 0) - b.lambda.B(0, 0)));
  d = std::max(d, max_abs_coeff_diff(a.g.phi_minus_id[0], b.g.phi_minus_id[0]));
  d = std::max(d, max_abs_coeff_diff(a.g.R0[0], b.g.R0[0]));
  d = std::max(d, max_abs_coeff_diff(a.g.R1(0, 0), b.g.R1(0, 0)));
  return std::max(d, (a.u - b.u).norm(0.0));
}

// |g_* u + lambda - v|_0 / |v|_0 through push_forward, independent of the iteration's residual.
double forward_residual(const NewtonState& x, const VectorFieldJet& v) {
  return (push_forward(x.g, x.u) + x.lambda.field(v.order()) - v).norm(0.0) / v.norm(0.0);
}

}  // namespace

TEST_CASE("quadratic certificate") {
  SUBCASE("exact quadratic sequence") {
    std::vector<double> r{1e-2, 1e-4, 1e-8};
    auto c = quadratic_certificate(r);
    CHECK(c.exponent == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c.constant == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(c.pairs == 2);
  }
  SUBCASE("linear sequence") {
    std::vector<double> r{1e-2, 5e-3, 2.5e-3};
    CHECK(quadratic_certificate(r).exponent == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("pairs ending below the floor are dropped") {
    std::vector<double> r{1e-2, 1e-4, 1e-8, 1e-16};
    CHECK(quadratic_certificate(r).pairs == 2);
  }
  SUBCASE("too few pairs") {
    std::vector<double> r{1e-2, 1e-4};
    CHECK_THROWS_AS(quadratic_certificate(r), NumericalError);
  }
}

TEST_CASE("diagnostic width schedule") {
  NewtonConfig cfg;
  cfg.s = 0.5;
  cfg.sigma = 0.25;
  for (int k = 0; k < 20; ++k) {
    CHECK(cfg.sigma_k(k) == cfg.sigma / 6.0 * std::pow(0.5, k));
    CHECK(cfg.s_k(k + 1) == cfg.s_k(k) - 3.0 * cfg.sigma_k(k));
    CHECK(cfg.s_k(k + 1) > cfg.s - cfg.sigma);
  }
  // the widths never exhaust the budget: s_k -> s - sigma
  CHECK(cfg.s_k(60) == doctest::Approx(cfg.s - cfg.sigma).epsilon(1e-15));
}

TEST_CASE("newton_solve, Moser variant") {
  const auto u0 = straight(-0.1);
  SUBCASE("unperturbed target converges at iteration 0") {
    auto res = newton_solve(Variant::moser, u0, NewtonState::initial(u0));
    CHECK(res.iterations == 0);
    CHECK(res.x.g.distance_from_identity() == 0.0);
    CHECK(res.x.lambda.norm() == 0.0);
    CHECK_FALSE(res.certificate.has_value());
  }
  SUBCASE("constant admissible counter-term is found in one step") {
    CounterTerm lbar = CounterTerm::zero(1, 1);
    lbar.beta[0] = 1e-3;
    lbar.B(0, 0) = -2e-3;
    auto res = newton_solve(Variant::moser, u0 + lbar.field(kOrder), NewtonState::initial(u0));
    CHECK(res.iterations == 1);
    CHECK(std::abs(res.x.lambda.beta[0] - 1e-3) < 1e-16);
    CHECK(std::abs(res.x.lambda.B(0, 0) + 2e-3) < 1e-16);
    CHECK(res.x.g.distance_from_identity() < 1e-16);
  }
  SUBCASE("trigonometric perturbation: quadratic rate, right inverse, restart consistency") {
    const auto v = perturbed(u0, 1e-3);
    NewtonConfig cfg;
    cfg.trace = true;
    auto res = newton_solve(Variant::moser, v, NewtonState::initial(u0), cfg);
    REQUIRE(res.certificate.has_value());
    CHECK(res.certificate->exponent >= 1.7);
    CHECK(res.certificate->exponent <= 2.2);
    CHECK(res.residuals.back() <= cfg.residual_tol);
    for (std::size_t k = 2; k < res.residuals.size(); ++k) CHECK(res.residuals[k] < res.residuals[k - 1]);
    CHECK(res.trace.size() == static_cast<std::size_t>(res.iterations));
    CHECK(forward_residual(res.x, v) < 1e-10);
    CHECK(res.x.u.mixed_jet_norm() == doctest::Approx(u0.mixed_jet_norm()).epsilon(1e-14));

    // x1 by hand, then a fresh run from it
    NewtonState x1 = NewtonState::initial(u0);
    auto sol = solve_linearized_moser_pulled(x1.g, x1.u, pulled_back_defect(x1, v));
    x1.g = apply_update(x1.g, sol.gdot);
    x1.u += sol.delta_u;
    x1.lambda += sol.delta_lambda;
    auto again = newton_solve(Variant::moser, v, x1);
    CHECK(again.iterations == res.iterations - 1);
    CHECK(state_gap(again.x, res.x) < 1e-14);

    // the invariant torus of the normal form solves the ODE for v
    const double cr = conjugacy_residual(res.x.g, res.x.u, res.x.lambda, v, 200, 7, 0.05);
    CHECK(cr < 1e-8);
  }
  SUBCASE("local uniqueness from a distinct initial triple") {
    const auto v = perturbed(u0, 1e-3);
    auto a = newton_solve(Variant::moser, v, NewtonState::initial(u0));
    NewtonState x0 = NewtonState::initial(u0);
    x0.g.phi_minus_id[0] = FourierSeries::from_modes(1, kOrder, {{{1}, cplx(0.0, 2e-4)}});
    x0.g.phi_minus_id[0].set_average(-x0.g.phi_minus_id[0].evaluate(std::vector<double>{0.0}));
    x0.g.R0[0] = FourierSeries::from_modes(1, kOrder, {{{2}, cplx(1e-4, 0.0)}});
    auto b = newton_solve(Variant::moser, v, x0);
    CHECK(std::abs(a.x.lambda.beta[0] - b.x.lambda.beta[0]) <= 10 * 1e-11);
    CHECK(std::abs(a.x.lambda.B(0, 0) - b.x.lambda.B(0, 0)) <= 10 * 1e-11);
    CHECK(max_abs_coeff_diff(a.x.g.phi_minus_id[0], b.x.g.phi_minus_id[0]) <= 10 * 1e-11);
    CHECK(max_abs_coeff_diff(a.x.g.R0[0], b.x.g.R0[0]) <= 10 * 1e-11);
  }
  SUBCASE("divergence guard and iteration cap") {
    NewtonConfig cfg;
    cfg.max_iters = 1;
    CHECK_THROWS_AS(newton_solve(Variant::moser, perturbed(u0, 1e-3), NewtonState::initial(u0), cfg), NumericalError);
    try {
      newton_solve(Variant::moser, perturbed(u0, 1e-3), NewtonState::initial(u0), cfg);
    } catch (const NumericalError& e) {
      CHECK(e.kind() == ErrorKind::MaxItersExceeded);
    }
  }
}

TEST_CASE("newton_solve, Hamiltonian variants") {
  RJet H(1, kOrder, 1);
  H.linear(0).set_average(tfs::golden());
  H.quadratic(0, 0).set_average(0.5);
  for (double eta : {0.1, -0.1}) {
    const auto u0 = hamiltonian_field(H, eta, std::vector<double>{tfs::golden()});
    RJet Hp(1, kOrder, 1);
    Hp.constant_term() = FourierSeries::from_modes(1, kOrder, {{{1}, cplx(5e-4, 0.0)}});
    Hp.linear(0) = FourierSeries::from_modes(1, kOrder, {{{1}, cplx(0.0, 5e-4)}});
    const auto v = u0 + hamiltonian_field(Hp, 0.0);
    SUBCASE("dissipative Herman") {
      auto res = newton_solve(Variant::herman_dissipative, v, NewtonState::initial(u0, Flavor::exact_symplectic));
      REQUIRE(res.certificate.has_value());
      CHECK(res.certificate->exponent >= 1.7);
      CHECK(forward_residual(res.x, v) < 1e-10);
      CHECK(res.x.lambda.b[0] == 0.0);
    }
    SUBCASE("Russmann") {
      auto res = newton_solve(Variant::russmann, v, NewtonState::initial(u0, Flavor::symplectic));
      REQUIRE(res.certificate.has_value());
      CHECK(res.certificate->exponent >= 1.7);
      CHECK(forward_residual(res.x, v) < 1e-10);
      CHECK(res.x.lambda.beta[0] == 0.0);
    }
  }
  SUBCASE("non-Hamiltonian A is rejected") {
    auto u2 = VectorFieldJet::straight(std::vector<double>{0.3, 0.4}, Eigen::Vector2d(-0.1, -0.2).asDiagonal(), 8);
    CHECK_THROWS_AS(newton_solve(Variant::herman_dissipative, u2, NewtonState::initial(u2, Flavor::exact_symplectic)),
                    NumericalError);
  }
}

TEST_CASE("twist elimination") {
  const auto u0 = straight(-0.5);
  SUBCASE("unperturbed: A unchanged") {
    auto t = eliminate_twist_matrix(u0, u0);
    CHECK(t.outer_iterations == 1);
    CHECK(t.A(0, 0) == -0.5);
  }
  SUBCASE("shifted A is recovered with one correction") {
    auto t = eliminate_twist_matrix(straight(-0.47), u0);
    CHECK(t.outer_iterations == 2);
    CHECK(std::abs(t.A(0, 0) + 0.47) < 1e-14);
    CHECK(t.result.x.lambda.B.cwiseAbs().maxCoeff() <= 1e-10);
  }
  SUBCASE("1e-3 perturbation: B vanishes and the torus passes the conjugacy check") {
    const auto v = perturbed(u0, 1e-3);
    auto t = eliminate_twist_matrix(v, u0);
    CHECK(t.result.x.lambda.B.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(t.result.x.u.A(0, 0) == t.A(0, 0));
    CHECK(conjugacy_residual(t.result.x.g, t.result.x.u, t.result.x.lambda, v) <= 1e-8);
  }
  SUBCASE("colliding eigenvalues") {
    auto u = VectorFieldJet::straight(std::vector<double>{tfs::golden()}, Eigen::MatrixXd::Identity(2, 2) * -0.5, 8);
    CHECK_THROWS_AS(eliminate_twist_matrix(u, u), NumericalError);
  }
}

TEST_CASE("translation twist elimination") {
  const auto u0 = straight(-0.3, 1.0);
  SUBCASE("unperturbed: c = 0, b = 0") {
    auto t = eliminate_translation_twist(u0, u0);
    CHECK(t.c[0] == 0.0);
    CHECK(t.b[0] == 0.0);
    CHECK(t.twist_singular_values(0) == doctest::Approx(1.0));
  }
  SUBCASE("action shift c0 is undone") {
    const double c0 = 2e-3;
    auto t = eliminate_translation_twist(shift_actions(u0, std::vector<double>{c0}), u0);
    CHECK(std::abs(t.c[0] + c0) < 1e-10);
    CHECK(std::abs(t.b[0]) < 1e-10);
    CHECK(std::abs(t.twist.result.x.lambda.beta[0]) <= 1e-10);
  }
  SUBCASE("perturbed: beta(c) changes sign once, at the returned c") {
    const auto v = perturbed(u0, 1e-3);
    auto t = eliminate_translation_twist(v, u0);
    NewtonConfig inner;
    inner.pin_translation = true;
    std::vector<double> cs, betas;
    for (int i = -10; i <= 10; ++i) {
      const double c = t.c[0] + 2e-3 * i;
      auto r = eliminate_twist_matrix(shift_actions(v, std::vector<double>{c}), u0, inner);
      cs.push_back(c);
      betas.push_back(r.result.x.lambda.beta[0]);
    }
    int changes = 0;
    for (std::size_t i = 1; i < betas.size(); ++i)
      if ((betas[i] > 0) != (betas[i - 1] > 0)) ++changes;
    CHECK(changes == 1);
    // bisection on the scan reproduces c*
    double lo = cs.front(), hi = cs.back();
    const bool up = betas.back() > betas.front();
    for (int it = 0; it < 30; ++it) {
      const double mid = 0.5 * (lo + hi);
      auto r = eliminate_twist_matrix(shift_actions(v, std::vector<double>{mid}), u0, inner);
      ((r.result.x.lambda.beta[0] > 0) == up ? hi : lo) = mid;
    }
    CHECK(std::abs(0.5 * (lo + hi) - t.c[0]) < 1e-9);
  }
  SUBCASE("rank-deficient twist") {
    CHECK_THROWS_AS(eliminate_translation_twist(straight(-0.3), straight(-0.3)), NumericalError);
  }
}
