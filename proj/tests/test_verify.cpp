#include <cmath>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "torusforge/errors.hpp"
#include "torusforge/spinorbit.hpp"
#include "torusforge/verify.hpp"

using namespace torusforge;

namespace {

SpinOrbitProblem fixture(double eta = 0.1, double epsilon = 0.0) {
  SpinOrbitProblem p;
  p.alpha = tfs::golden();
  p.nu = p.alpha;
  p.eta = eta;
  p.epsilon = epsilon;
  return p;
}

// theta(t) = nu t + theta0 + (r0 - (nu - alpha)) / eta (1 - e^{-eta t}), r0 = theta_dot0 - alpha
double closed_form(const SpinOrbitProblem& p, double theta0, double theta_dot0, double t) {
  const double r0 = theta_dot0 - p.alpha;
  return p.nu * t + theta0 + (r0 - (p.nu - p.alpha)) / p.eta * (1.0 - std::exp(-p.eta * t));
}

double max_closed_form_error(const SpinOrbitProblem& p, double dt) {
  auto tr = integrate_spin_orbit(p, 0.3, 0.9, 100.0, dt);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    worst = std::max(worst, std::abs(tr.theta[i] - closed_form(p, 0.3, 0.9, tr.t[i])));
  return worst;
}

}  // namespace

TEST_CASE("spin-orbit integrator") {
  SUBCASE("eps = 0 closed form over T = 100") {
    auto p = fixture(0.1);
    CHECK(max_closed_form_error(p, 1e-2) < 1e-8);
    p.nu = p.alpha + 0.05;
    CHECK(max_closed_form_error(p, 1e-2) < 1e-8);
  }
  // round-off accumulates linearly over 5000 steps
  SUBCASE("eta = 0, eps = 0: uniform rotation") {
    auto tr = integrate_spin_orbit(fixture(0.0), 1.0, 0.7, 50.0);
    for (std::size_t i = 0; i < tr.t.size(); i += 100) CHECK(std::abs(tr.theta[i] - (1.0 + 0.7 * tr.t[i])) < 1e-10);
  }
  SUBCASE("global error order on the closed form") {
    auto p = fixture(0.1);
    p.nu = p.alpha + 0.05;
    const double e1 = max_closed_form_error(p, 0.2), e2 = max_closed_form_error(p, 0.1);
    const double e3 = max_closed_form_error(p, 0.05);
    CHECK(std::log2(e1 / e2) >= 3.8);
    CHECK(std::log2(e2 / e3) >= 3.8);
  }
  SUBCASE("Richardson self-convergence at eps = 1e-3") {
    auto p = fixture(0.1, 1e-3);
    auto end = [&](double dt) { return integrate_spin_orbit(p, 0.3, 0.9, 50.0, dt).theta.back(); };
    const double a = end(0.2), b = end(0.1), c = end(0.05);
    CHECK(std::log2(std::abs(a - b) / std::abs(b - c)) >= 3.8);
  }
  SUBCASE("stride, lift continuity and reverse time") {
    auto tr = integrate_spin_orbit(fixture(0.1, 1e-2), 0.0, 3.0, 20.0, 1e-2, 0.0, 10);
    CHECK(tr.t.size() == 201);
    for (std::size_t i = 1; i < tr.t.size(); ++i) {
      CHECK(tr.t[i] > tr.t[i - 1]);
      CHECK(std::abs(tr.theta[i] - tr.theta[i - 1]) < M_PI);
    }
    auto back = integrate_spin_orbit(fixture(0.1, 1e-2), tr.theta.back(), tr.theta_dot.back(), -20.0, 1e-2, 20.0);
    CHECK(std::abs(back.t.back()) < 1e-12);
    CHECK(std::abs(back.theta.back() - 0.0) < 1e-9);
    CHECK(std::abs(back.theta_dot.back() - 3.0) < 1e-9);
  }
  SUBCASE("blow-up is reported") {
    CHECK_THROWS_AS(integrate_spin_orbit(fixture(-5.0), 0.0, 1.0, 100.0, 1e-2), NumericalError);
  }
  SUBCASE("the general jet integrator agrees on the extended field") {
    auto p = fixture(0.1, 1e-2);
    p.nu = p.alpha + 0.01;
    auto a = integrate_spin_orbit(p, 0.4, 0.5, 30.0);
    const std::vector<double> x0{0.4, 0.0, 0.5 - p.alpha, 0.0};
    auto b = integrate_field(build_extended_field(p), x0, 30.0);
    CHECK(std::abs(a.theta.back() - b.x.back()[0]) < 1e-10);
    CHECK(std::abs(a.theta_dot.back() - p.alpha - b.x.back()[2]) < 1e-10);
    CHECK(std::abs(b.x.back()[1] - 30.0) < 1e-10);
  }
}

TEST_CASE("rotation number") {
  SUBCASE("eps = 0, nu = alpha from any initial condition") {
    for (double thd : {0.0, 0.618, 2.0}) {
      auto est = rotation_number(integrate_spin_orbit(fixture(0.1), 1.0, thd, 2000.0, 1e-2, 0.0, 10));
      CHECK(std::abs(est.value - tfs::golden()) < 1.0 / 1000.0);
      CHECK(std::abs(est.value - tfs::golden()) < 1e-12);
    }
  }
  SUBCASE("eps = 0, nu = alpha + 0.1") {
    auto p = fixture(0.1);
    p.nu = p.alpha + 0.1;
    auto est = rotation_number(integrate_spin_orbit(p, 0.0, 0.0, 2000.0, 1e-2, 0.0, 10));
    CHECK(std::abs(est.value - (p.alpha + 0.1)) < 1e-10);
  }
  SUBCASE("window too short") {
    CHECK_THROWS_AS(rotation_number(integrate_spin_orbit(fixture(0.1), 0.0, 0.0, 200.0)), NumericalError);
  }
  SUBCASE("reverse-time trajectories") {
    auto p = fixture(-0.1);
    auto est = rotation_number(integrate_spin_orbit(p, 0.0, 1.0, -2000.0, 1e-2, 0.0, 10));
    CHECK(std::abs(est.value - p.alpha) < 1e-12);
  }
  SUBCASE("basin invariance at eps = 1e-3") {
    auto p = fixture(0.1, 1e-3);
    auto a = rotation_number(integrate_spin_orbit(p, 0.0, p.alpha, 8000.0, 1e-2, 0.0, 10));
    auto b = rotation_number(integrate_spin_orbit(p, 2.0, p.alpha + 0.3, 8000.0, 1e-2, 0.0, 10));
    CHECK(std::abs(a.value - b.value) <= 2.0 * std::max(std::abs(a.error), std::abs(b.error)));
  }
}

TEST_CASE("Floquet exponent") {
  const int K = 16;
  TorusEmbedding flat{Conjugacy::identity(2, 2, K, Flavor::symplectic), tfs::golden()};
  SUBCASE("eps = 0: exponent -eta") {
    for (double eta : {0.1, 0.3}) {
      auto f = floquet_exponent(fixture(eta), flat);
      CHECK(std::abs(f.exponent + eta) < 1e-6);
      CHECK(f.final_distance < f.initial_distance);
    }
  }
  SUBCASE("eta < 0 is attracting in reverse time and escapes forward") {
    auto f = floquet_exponent(fixture(-0.1), flat);
    CHECK(std::abs(f.exponent - 0.1) < 1e-6);
    try {
      floquet_exponent(fixture(-0.1), flat, 1e-3, 0.0, 1e-2, +1);
      FAIL("expected EscapedNeighborhood");
    } catch (const NumericalError& e) {
      CHECK(e.kind() == ErrorKind::EscapedNeighborhood);
    }
  }
  SUBCASE("embedding geometry") {
    Conjugacy g = Conjugacy::identity(2, 2, K, Flavor::general);
    g.R0[0] = FourierSeries::from_modes(2, K, {{{1, 0}, {0.01, 0.0}}});
    TorusEmbedding W{g, 0.5};
    auto [th, thd] = W.at(0.0, 0.0);
    CHECK(th == 0.0);
    CHECK(std::abs(thd - 0.52) < 1e-15);
    CHECK(W.distance(0.0, 0.52, 0.0) < 1e-12);
    CHECK(std::abs(W.distance(2 * M_PI, 0.62, 0.0) - 0.1) < 1e-6);
  }
}

TEST_CASE("conjugacy residual") {
  auto p = fixture(0.1);
  const auto v = build_extended_field(p);
  const auto u = reference_field(p);
  auto g = Conjugacy::identity(2, 2, p.order, Flavor::general);
  SUBCASE("exact unperturbed triple") {
    CHECK(conjugacy_residual(g, u, CounterTerm::zero(2, 2), v) == 0.0);
  }
  SUBCASE("1e-6 perturbation of g is seen at first order") {
    g.R0[0] = FourierSeries::from_modes(2, p.order, {{{1, 0}, {0.5e-6, 0.0}}});
    const double r = conjugacy_residual(g, u, CounterTerm::zero(2, 2), v);
    CHECK(r > 1e-8);
    CHECK(r < 1e-5);
  }
  SUBCASE("counter-terms enter with the right sign") {
    CounterTerm l = CounterTerm::zero(2, 2);
    l.b[0] = 0.01;
    CHECK(conjugacy_residual(g, u, l, v + l.field(p.order)) < 1e-16);
  }
}

TEST_CASE("trajectory CSV") {
  auto tr = integrate_spin_orbit(fixture(0.1), 7.0, 1.0, 0.05);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,theta_mod_2pi,theta,theta_dot");
  std::getline(is, line);
  CHECK(line.rfind("0,0.71681469282041", 0) == 0);
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == static_cast<int>(tr.t.size()));
}
