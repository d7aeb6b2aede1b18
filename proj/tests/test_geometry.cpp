#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "torusforge/errors.hpp"
#include "torusforge/geometry.hpp"
#include "torusforge/verify.hpp"

using namespace torusforge;

namespace {

// Map coefficients decay fast enough that order-16 (order-10 for n = 2) truncation sits below 1e-12.
constexpr double kDecay = 2.5;

FourierSeries sin1(int K, double a = 1.0) { return FourierSeries::from_modes(1, K, {{{1}, cplx(0.0, -0.5 * a)}}); }
FourierSeries cos1(int K, double a = 1.0) { return FourierSeries::from_modes(1, K, {{{1}, cplx(0.5 * a, 0.0)}}); }

double field_diff(const VectorFieldJet& a, const VectorFieldJet& b) { return (a - b).norm(0.0); }

double max_abs(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Tangent part of degree <= 1 and normal part of degree <= 2: the class push_forward transports exactly.
VectorFieldJet transportable_field(std::mt19937_64& rng, int n, int m, int K, double amp) {
  VectorFieldJet u = tfs::random_field(rng, n, m, K, amp, kDecay);
  for (auto& c : u.tangent)
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) c.quadratic(a, b) = FourierSeries(n, K);
  return u;
}

std::vector<double> concat(const tfs::Point& p) {
  std::vector<double> x = p.theta;
  x.insert(x.end(), p.r.begin(), p.r.end());
  return x;
}

}  // namespace

TEST_CASE("invert_torus_map") {
  const int K = 16;
  SUBCASE("zero displacement") {
    auto psi = invert_torus_map(std::vector<FourierSeries>{FourierSeries(1, K)});
    CHECK(psi[0].weighted_norm(0.0) == 0.0);
  }
  SUBCASE("translation") {
    auto psi = invert_torus_map(std::vector<FourierSeries>{FourierSeries::constant(1, K, 0.3)});
    CHECK(std::abs(psi[0].average() + 0.3) < 1e-14);
    CHECK(psi[0].weighted_norm(0.0) - 0.3 < 1e-14);
  }
  SUBCASE("0.05 sin: forward composition at 128 points") {
    std::vector<FourierSeries> v{sin1(K, 0.05)};
    auto psi = invert_torus_map(v);
    double worst = 0.0;
    for (int p = 0; p < 128; ++p) {
      const double y = 2.0 * M_PI * p / 128.0 + 0.01;
      const double x = y + tfs::direct_eval(psi[0], {y});
      worst = std::max(worst, std::abs(x + 0.05 * std::sin(x) - y));
    }
    CHECK(worst < 1e-12);
  }
  SUBCASE("large displacement fails to contract") {
    CHECK_THROWS_AS(invert_torus_map(std::vector<FourierSeries>{sin1(K, 1.5)}), NumericalError);
  }
  SUBCASE("strip bound |psi - id|_{s-2 sigma} <= |v|_{s-sigma} whenever |v|_s < sigma / n") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> us(0.1, 0.6), usig(0.02, 0.1), ufrac(0.2, 0.99);
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + trial % 2;
      const double s = us(rng), sigma = std::min(usig(rng), s / 2.0);
      std::vector<FourierSeries> v;
      for (int i = 0; i < n; ++i) v.push_back(tfs::random_series(rng, n, n == 1 ? 16 : 8, 1.0, 1.0));
      double vs = 0.0;
      for (const auto& f : v) vs = std::max(vs, f.weighted_norm(s));
      const double scale = ufrac(rng) * sigma / n / vs;
      for (auto& f : v) f *= scale;
      auto psi = invert_torus_map(v);
      double lhs = 0.0, rhs = 0.0;
      for (int i = 0; i < n; ++i) {
        lhs = std::max(lhs, psi[i].weighted_norm(s - 2.0 * sigma));
        rhs = std::max(rhs, v[i].weighted_norm(s - sigma));
      }
      if (lhs > rhs) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("invert_conjugacy and compose") {
  const int K = 16;
  SUBCASE("identity") {
    auto h = invert_conjugacy(Conjugacy::identity(2, 2, K));
    CHECK(h.distance_from_identity() == 0.0);
  }
  SUBCASE("pure action shift") {
    Conjugacy g = Conjugacy::identity(1, 1, K);
    g.R0[0] = FourierSeries::constant(1, K, 0.2);
    auto h = invert_conjugacy(g);
    CHECK(std::abs(h.R0[0].average() + 0.2) < 1e-15);
    CHECK(h.phi_minus_id[0].weighted_norm(0.0) < 1e-15);
    CHECK(max_abs_coeff_diff(h.R1(0, 0), FourierSeries::constant(1, K, 1.0)) < 1e-15);
  }
  SUBCASE("random small g: g(g^{-1}(x)) = x at 20 points") {
    std::mt19937_64 rng(3);
    for (int n : {1, 2}) {
      auto g = tfs::random_general(rng, n, n, n == 1 ? K : 10, 0.02, kDecay);
      auto h = invert_conjugacy(g);
      double worst = 0.0;
      for (int p = 0; p < 20; ++p) {
        auto x = tfs::random_point(rng, n, n, 0.3);
        auto y = h.evaluate(x.theta, x.r);
        auto z = g.evaluate(std::span(y).first(n), std::span(y).subspan(n));
        auto xs = concat(x);
        for (int i = 0; i < n; ++i) z[i] -= xs[i], z[i] = std::remainder(z[i], 2 * M_PI);
        for (int a = 0; a < n; ++a) z[n + a] -= xs[n + a];
        for (double d : z) worst = std::max(worst, std::abs(d));
      }
      CHECK(worst < 1e-11);
    }
  }
  SUBCASE("compose agrees with pointwise composition") {
    std::mt19937_64 rng(4);
    auto g1 = tfs::random_general(rng, 1, 1, K, 0.02, kDecay);
    auto g2 = tfs::random_general(rng, 1, 1, K, 0.02, kDecay);
    auto g = compose(g2, g1);
    for (int p = 0; p < 20; ++p) {
      auto x = tfs::random_point(rng, 1, 1, 0.3);
      auto y = g1.evaluate(x.theta, x.r);
      auto z = g2.evaluate(std::span(y).first(1), std::span(y).subspan(1));
      auto w = g.evaluate(x.theta, x.r);
      CHECK(max_abs(z, w) < 1e-12);
    }
  }
  SUBCASE("singular R1 is rejected") {
    Conjugacy g = Conjugacy::identity(1, 1, K);
    g.R1(0, 0) = cos1(K);
    CHECK_THROWS_AS(invert_conjugacy(g), NumericalError);
  }
}

TEST_CASE("push_forward and pull_back") {
  const int K = 16;
  std::mt19937_64 rng(5);
  SUBCASE("identity map returns the field") {
    auto u = tfs::random_field(rng, 2, 1, 8, 0.1);
    auto id = Conjugacy::identity(2, 1, 8);
    CHECK(field_diff(push_forward(id, u), u) < 1e-14);
    CHECK(field_diff(pull_back(id, u), u) < 1e-14);
  }
  SUBCASE("constant field under a torus rotation") {
    VectorFieldJet u(1, 1, K);
    u.tangent[0].constant_term().set_average(tfs::golden());
    Conjugacy g = Conjugacy::identity(1, 1, K);
    g.phi_minus_id[0] = FourierSeries::constant(1, K, 0.7);
    CHECK(field_diff(push_forward(g, u), u) < 1e-15);
    CHECK(field_diff(pull_back(g, u), u) < 1e-15);
  }
  SUBCASE("pointwise transport identity g_*u(g(x)) = g'(x) u(x)") {
    for (int n : {1, 2}) {
      const int order = n == 1 ? K : 10;
      auto g = tfs::random_general(rng, n, n, order, 0.02, kDecay);
      auto u = transportable_field(rng, n, n, order, 0.2);
      auto w = push_forward(g, u);
      double worst = 0.0;
      for (int p = 0; p < 20; ++p) {
        auto x = tfs::random_point(rng, n, n, 0.3);
        auto y = g.evaluate(x.theta, x.r);
        auto lhs = w.evaluate(std::span(y).first(n), std::span(y).subspan(n));
        Eigen::VectorXd ux = Eigen::Map<const Eigen::VectorXd>(u.evaluate(x.theta, x.r).data(), 2 * n);
        Eigen::VectorXd rhs = g.jacobian(x.theta, x.r) * ux;
        for (int i = 0; i < 2 * n; ++i) worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
      }
      CHECK(worst < 1e-11);
    }
  }
  SUBCASE("ODE transport: g maps trajectories of u onto trajectories of g_*u") {
    auto g = tfs::random_general(rng, 1, 1, K, 0.02, kDecay);
    auto u = transportable_field(rng, 1, 1, K, 0.2);
    u.tangent[0].constant_term().set_average(tfs::golden());
    auto w = push_forward(g, u);
    for (int p = 0; p < 3; ++p) {
      auto x0 = tfs::random_point(rng, 1, 1, 0.1);
      auto y0 = g.evaluate(x0.theta, x0.r);
      auto tu = integrate_field(u, concat(x0), 1.0, 1e-2);
      auto tw = integrate_field(w, y0, 1.0, 1e-2);
      const auto& xe = tu.x.back();
      auto mapped = g.evaluate(std::span(xe).first(1), std::span(xe).subspan(1));
      const auto& ye = tw.x.back();
      CHECK(std::abs(std::remainder(mapped[0] - ye[0], 2 * M_PI)) < 1e-9);
      CHECK(std::abs(mapped[1] - ye[1]) < 1e-9);
    }
  }
  SUBCASE("round trips") {
    for (int n : {1, 2}) {
      const int order = n == 1 ? K : 10;
      auto g = tfs::random_general(rng, n, n, order, 0.02, kDecay);
      auto u = transportable_field(rng, n, n, order, 0.2);
      CHECK(field_diff(pull_back(g, push_forward(g, u)), u) < 1e-10);
      CHECK(field_diff(push_forward(g, pull_back(g, u)), u) < 1e-10);
    }
  }
  SUBCASE("functoriality") {
    auto g1 = tfs::random_general(rng, 1, 1, K, 0.01, kDecay);
    auto g2 = tfs::random_general(rng, 1, 1, K, 0.01, kDecay);
    auto u = transportable_field(rng, 1, 1, K, 0.2);
    CHECK(field_diff(push_forward(g2, push_forward(g1, u)), push_forward(compose(g2, g1), u)) < 1e-9);
  }
  SUBCASE("pull_back of a normal-only change keeps the counter-term shape") {
    auto g = tfs::random_general(rng, 1, 1, K, 0.02, kDecay);
    auto u = push_forward(g, pull_back(g, VectorFieldJet::straight(std::vector<double>{0.3}, Eigen::MatrixXd::Constant(1, 1, -0.1), K)));
    CHECK(std::abs(u.tangent[0].constant_term().average() - 0.3) < 1e-12);
    CHECK(std::abs(u.normal[0].linear(0).average() + 0.1) < 1e-12);
  }
}

TEST_CASE("lie_bracket") {
  const int K = 16;
  std::mt19937_64 rng(6);
  SUBCASE("constant fields commute") {
    VectorFieldJet f(2, 1, K), h(2, 1, K);
    f.tangent[0].constant_term().set_average(0.4);
    f.normal[0].constant_term().set_average(-1.0);
    h.tangent[1].constant_term().set_average(2.0);
    CHECK(lie_bracket(f, h).norm(0.0) == 0.0);
  }
  SUBCASE("alpha d_theta against w d_theta reduces to the Lie derivative") {
    const double alpha = tfs::golden();
    VectorFieldJet f(1, 1, K), h(1, 1, K);
    f.tangent[0].constant_term().set_average(alpha);
    FourierSeries w = tfs::random_series(rng, 1, K, 1.0, 0.5);
    h.tangent[0].constant_term() = w;
    auto b = lie_bracket(f, h);
    VectorFieldJet expect(1, 1, K);
    expect.tangent[0].constant_term() = differentiate(w, 0) * alpha;
    CHECK(field_diff(b, expect) < 1e-13);
  }
  SUBCASE("antisymmetry is exact") {
    auto f = tfs::random_field(rng, 2, 2, 6, 0.5);
    auto h = tfs::random_field(rng, 2, 2, 6, 0.5);
    auto a = lie_bracket(f, h), b = lie_bracket(h, f);
    CHECK((a + b).norm(0.0) == 0.0);
  }
  SUBCASE("pointwise oracle Dh f - Df h by central differences") {
    auto f = tfs::affine_field(rng, 1, 1, 8, K, 0.5);
    auto h = tfs::affine_field(rng, 1, 1, 8, K, 0.5);
    auto b = lie_bracket(f, h);
    const double d = 1e-5;
    for (int p = 0; p < 10; ++p) {
      auto x = tfs::random_point(rng, 1, 1, 0.5);
      auto fx = f.evaluate(x.theta, x.r), hx = h.evaluate(x.theta, x.r);
      auto dir = [&](const VectorFieldJet& F, const std::vector<double>& v) {
        std::vector<double> tp{x.theta[0] + d * v[0]}, tm{x.theta[0] - d * v[0]};
        std::vector<double> rp{x.r[0] + d * v[1]}, rm{x.r[0] - d * v[1]};
        auto a = F.evaluate(tp, rp), c = F.evaluate(tm, rm);
        return std::vector<double>{(a[0] - c[0]) / (2 * d), (a[1] - c[1]) / (2 * d)};
      };
      auto dhf = dir(h, fx), dfh = dir(f, hx);
      auto bx = b.evaluate(x.theta, x.r);
      for (int i = 0; i < 2; ++i) CHECK(std::abs(bx[i] - (dhf[i] - dfh[i])) < 1e-7);
    }
  }
  SUBCASE("norm bound (2 / sigma)(1 + 1/e) |f|_{s+sigma} |h|_{s+sigma}") {
    std::uniform_real_distribution<double> us(0.05, 0.5), usig(0.02, 0.3);
    int violations = 0;
    double worst_ratio = 0.0;
    for (int trial = 0; trial < 120; ++trial) {
      const int n = 1 + trial % 2, m = 1 + (trial / 2) % 2;
      const int band = n == 1 ? 8 : 4;
      auto f = tfs::affine_field(rng, n, m, band, 2 * band, 1.0);
      auto h = tfs::affine_field(rng, n, m, band, 2 * band, 1.0);
      const double s = us(rng), sigma = usig(rng);
      // degree-1 factors keep the bracket inside the degree-2 jet, band-limited factors inside the order
      const double lhs = tfs::polydisc_norm_upper(lie_bracket(f, h), s);
      const double rhs = 2.0 / sigma * (1.0 + std::exp(-1.0)) * tfs::polydisc_norm_lower(f, s + sigma) *
                         tfs::polydisc_norm_lower(h, s + sigma);
      worst_ratio = std::max(worst_ratio, lhs / rhs);
      if (lhs > rhs) ++violations;
    }
    INFO("worst lhs / rhs = " << worst_ratio);
    CHECK(violations == 0);
  }
  SUBCASE("polydisc norm bounds bracket each other") {
    auto f = tfs::random_field(rng, 1, 2, 6, 1.0);
    const double lo = tfs::polydisc_norm_lower(f, 0.3), hi = tfs::polydisc_norm_upper(f, 0.3);
    CHECK(lo <= hi * (1 + 1e-14));
    CHECK(lo >= 0.5 * hi);
  }
  SUBCASE("naturality under pull-back for normal-linear maps") {
    const int Kn = 24;
    Conjugacy g = tfs::random_general(rng, 1, 1, 8, 0.02, kDecay);
    g = Conjugacy{g.flavor, 1, 1, {g.phi_minus_id[0].with_order(Kn)}, {FourierSeries(1, Kn)},
                  SeriesMatrix::identity(1, 1, Kn), FourierSeries(1, Kn), {}};
    g.R1(0, 0) += tfs::random_series(rng, 1, 4, 0.02, 0.7).with_order(Kn);
    auto f = tfs::affine_field(rng, 1, 1, 4, Kn, 0.3);
    auto h = tfs::affine_field(rng, 1, 1, 4, Kn, 0.3);
    auto lhs = pull_back(g, lie_bracket(f, h));
    auto rhs = lie_bracket(pull_back(g, f), pull_back(g, h));
    CHECK(field_diff(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("hamiltonian transport") {
  const int K = 16;
  std::mt19937_64 rng(7);
  auto random_H = [&](int n) {
    RJet H = tfs::random_jet(rng, n, n == 1 ? K : 10, n, 0.1, kDecay);
    return H;
  };
  SUBCASE("identity keeps H") {
    RJet H = random_H(1);
    auto out = push_forward_ham_dissipative(Conjugacy::identity(1, 1, K, Flavor::exact_symplectic), H, 0.1);
    CHECK((out.H - H).norm(0.0) < 1e-14);
    CHECK(out.translation[0] == 0.0);
  }
  SUBCASE("general flavor is rejected") {
    CHECK_THROWS_AS(push_forward_ham_dissipative(Conjugacy::identity(1, 1, K), random_H(1), 0.1), NumericalError);
  }
  SUBCASE("eta = 0 is plain transport H o g^{-1}") {
    auto g = tfs::random_symplectic(rng, 1, K, 0.02, Flavor::exact_symplectic, kDecay);
    RJet H = random_H(1);
    auto out = push_forward_ham_dissipative(g, H, 0.0);
    auto ginv = invert_conjugacy(g);
    for (int p = 0; p < 10; ++p) {
      auto x = tfs::random_point(rng, 1, 1, 0.3);
      auto y = ginv.evaluate(x.theta, x.r);
      CHECK(std::abs(out.H.evaluate(x.theta, x.r) - H.evaluate(std::span(y).first(1), std::span(y).subspan(1))) <
            1e-12);
    }
  }
  SUBCASE("matches generic push_forward of X_H - eta r d_r; the -eta Id block survives") {
    for (Flavor flavor : {Flavor::exact_symplectic, Flavor::symplectic})
      for (int n : {1, 2}) {
        auto g = tfs::random_symplectic(rng, n, n == 1 ? K : 10, 0.02, flavor, kDecay);
        RJet H = random_H(n);
        const double eta = 0.1;
        auto out = push_forward_ham_dissipative(g, H, eta);
        auto generic = push_forward(g, hamiltonian_field(H, eta));
        CHECK(field_diff(out.field(), generic) < 1e-10);
      }
  }
}

TEST_CASE("symplectic conjugacies") {
  std::mt19937_64 rng(8);
  SUBCASE("R0 and R1 follow from (S, xi)") {
    auto g = tfs::random_symplectic(rng, 1, 16, 0.05, Flavor::symplectic, kDecay);
    for (int p = 0; p < 10; ++p) {
      const double t = 2 * M_PI * p / 10.0;
      const double dphi = 1.0 + tfs::direct_eval(differentiate(g.phi_minus_id[0], 0), {t});
      const double dS = tfs::direct_eval(differentiate(g.S, 0), {t});
      CHECK(std::abs(tfs::direct_eval(g.R1(0, 0), {t}) - 1.0 / dphi) < 1e-12);
      CHECK(std::abs(tfs::direct_eval(g.R0[0], {t}) - (dS + g.xi[0]) / dphi) < 1e-12);
    }
  }
  SUBCASE("phi fixes the origin") {
    auto g = tfs::random_symplectic(rng, 2, 8, 0.05, Flavor::exact_symplectic);
    for (const auto& v : g.phi_minus_id) CHECK(std::abs(v.evaluate(std::vector<double>{0.0, 0.0})) < 1e-13);
    for (double x : g.xi) CHECK(x == 0.0);
  }
}
