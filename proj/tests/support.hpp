#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "torusforge/fourier.hpp"
#include "torusforge/geometry.hpp"
#include "torusforge/jets.hpp"

namespace tfs {

using namespace torusforge;

inline double golden() { return (std::sqrt(5.0) - 1.0) / 2.0; }

// Frequency vectors: (g) and (g, sqrt 2 - 1) with g the golden mean.
inline std::vector<double> golden_alpha(int n) {
  std::vector<double> a{golden()};
  if (n > 1) a.push_back(std::sqrt(2.0) - 1.0);
  return a;
}

// Coefficients of size amp * U(-1, 1) * exp(-decay |k|_1).
inline FourierSeries random_series(std::mt19937_64& rng, int dim, int order, double amp = 1.0, double decay = 0.5,
                                   bool zero_average = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FourierSeries f(dim, order);
  auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = amp * std::exp(-decay * f.modes().l1(i));
    c[i] = i == 0 ? cplx(zero_average ? 0.0 : w * u(rng), 0.0) : cplx(w * u(rng), w * u(rng));
  }
  return f;
}

inline RJet random_jet(std::mt19937_64& rng, int dim, int order, int m, double amp = 1.0, double decay = 0.5) {
  RJet j(dim, order, m);
  for (std::size_t i = 0; i < j.size(); ++i) j[i] = random_series(rng, dim, order, amp, decay);
  return j;
}

inline VectorFieldJet random_field(std::mt19937_64& rng, int n, int m, int order, double amp = 1.0,
                                   double decay = 0.5) {
  VectorFieldJet v(n, m, order);
  for (int i = 0; i < n + m; ++i) v.component(i) = random_jet(rng, n, order, m, amp, decay);
  return v;
}

// Jet field of degree <= 1 in r whose modes stop at `band`, stored at order K.
inline VectorFieldJet affine_field(std::mt19937_64& rng, int n, int m, int band, int K, double amp) {
  VectorFieldJet f(n, m, K);
  for (int i = 0; i < n + m; ++i) {
    RJet& c = f.component(i);
    c.constant_term() = random_series(rng, n, band, amp, 0.5).with_order(K);
    for (int a = 0; a < m; ++a) c.linear(a) = random_series(rng, n, band, amp, 0.5).with_order(K);
  }
  return f;
}

// Maps with coefficient decay e^{-decay |k|}; truncation errors of compositions scale like e^{-decay K}.
inline Conjugacy random_general(std::mt19937_64& rng, int n, int m, int order, double amp, double decay = 0.7) {
  Conjugacy g = Conjugacy::identity(n, m, order);
  for (auto& f : g.phi_minus_id) f = random_series(rng, n, order, amp, decay);
  for (auto& f : g.R0) f = random_series(rng, n, order, amp, decay);
  for (auto& f : g.R1.entries()) f += random_series(rng, n, order, amp, decay);
  std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
  for (auto& f : g.phi_minus_id) f.set_average(f.average() - f.evaluate(zero));
  return g;
}

inline Conjugacy random_symplectic(std::mt19937_64& rng, int n, int order, double amp, Flavor flavor,
                                   double decay = 0.7) {
  std::vector<FourierSeries> v;
  std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    v.push_back(random_series(rng, n, order, amp, decay));
    v.back().set_average(v.back().average() - v.back().evaluate(zero));
  }
  FourierSeries S = random_series(rng, n, order, amp, decay, true);
  std::vector<double> xi(static_cast<std::size_t>(n), 0.0);
  if (flavor == Flavor::symplectic) {
    std::uniform_real_distribution<double> u(-amp, amp);
    for (auto& x : xi) x = u(rng);
  }
  return Conjugacy::from_generator(std::move(v), std::move(S), std::move(xi), flavor);
}

// Random point of T^n x R^m with |r|_inf <= r_max.
struct Point {
  std::vector<double> theta;
  std::vector<double> r;
};

inline Point random_point(std::mt19937_64& rng, int n, int m, double r_max) {
  std::uniform_real_distribution<double> a(0.0, 2.0 * M_PI), b(-r_max, r_max);
  Point p;
  for (int i = 0; i < n; ++i) p.theta.push_back(a(rng));
  for (int i = 0; i < m; ++i) p.r.push_back(b(rng));
  return p;
}

// Independent pointwise evaluation straight from the stored coefficients.
inline double direct_eval(const FourierSeries& f, const std::vector<double>& theta) {
  double acc = f.coeffs()[0].real();
  for (std::size_t i = 1; i < f.modes().size(); ++i) {
    const auto k = f.modes().mode(i);
    double ph = 0.0;
    for (int j = 0; j < f.dim(); ++j) ph += k[j] * theta[j];
    const cplx e = f.coeffs()[i] * std::exp(cplx(0.0, ph));
    acc += 2.0 * e.real();
  }
  return acc;
}

inline double max_coeff(const FourierSeries& f) {
  double d = 0.0;
  for (const auto& c : f.coeffs()) d = std::max(d, std::abs(c));
  return d;
}


// Weighted norm of a jet field with the r-coefficients measured on the polydisc |r_a| <= s:
// max over components of sum_k sup_{|r| <= s} |f_k(r)| e^{|k| s}. The upper variant bounds the sup
// by the triangle inequality, the lower one samples the distinguished boundary |r_a| = s.
inline double polydisc_norm_upper(const VectorFieldJet& f, double s) {
  double best = 0.0;
  for (int i = 0; i < f.n + f.m; ++i) {
    const RJet& c = f.component(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j)
      acc += c[j].weighted_norm(s) * std::pow(s, RJet::monomial_degree(j, f.m));
    best = std::max(best, acc);
  }
  return best;
}

inline double polydisc_norm_lower(const VectorFieldJet& f, double s, int samples = 48) {
  const int m = f.m;
  std::size_t total = 1;
  for (int a = 0; a < m; ++a) total *= static_cast<std::size_t>(samples);
  std::vector<std::vector<cplx>> rs;
  for (std::size_t p = 0; p < total; ++p) {
    std::vector<cplx> r;
    std::size_t q = p;
    for (int a = 0; a < m; ++a) {
      r.push_back(std::polar(s, 2.0 * M_PI * static_cast<double>(q % samples) / samples));
      q /= samples;
    }
    rs.push_back(std::move(r));
  }
  double best = 0.0;
  for (int i = 0; i < f.n + f.m; ++i) {
    const RJet& c = f.component(i);
    const auto& modes = c[0].modes();
    double acc = 0.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
      double sup = 0.0;
      for (const auto& r : rs) {
        cplx v = c[0].coeffs()[k];
        for (int a = 0; a < m; ++a) v += c.linear(a).coeffs()[k] * r[a];
        for (int a = 0; a < m; ++a)
          for (int b = a; b < m; ++b) v += c.quadratic(a, b).coeffs()[k] * r[a] * r[b];
        sup = std::max(sup, std::abs(v));
      }
      // modes k and -k share the sup since the circle is closed under conjugation
      acc += (k == 0 ? 1.0 : 2.0) * sup * std::exp(modes.l1(k) * s);
    }
    best = std::max(best, acc);
  }
  return best;
}

}  // namespace tfs
