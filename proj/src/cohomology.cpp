#include "torusforge/cohomology.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "log.hpp"
#include "torusforge/errors.hpp"

namespace torusforge {

namespace {

using cvec = Eigen::VectorXcd;

// Calls visit(k) for every k in Z^n with 0 < |k|_1 <= kmax; half restricts to the canonical half-space.
void for_each_mode(int n, int kmax, bool half, const std::function<void(const std::vector<int>&, int)>& visit) {
  std::vector<int> k(n, 0);
  std::function<void(int, int)> rec = [&](int axis, int budget) {
    if (axis == n) {
      int l1 = kmax - budget;
      if (l1 == 0) return;
      if (half) {
        for (int kj : k) {
          if (kj > 0) break;
          if (kj < 0) return;
        }
      }
      visit(k, l1);
      return;
    }
    for (int v = -budget; v <= budget; ++v) {
      k[axis] = v;
      rec(axis + 1, budget - std::abs(v));
    }
    k[axis] = 0;
  };
  rec(0, kmax);
}

double dot(const std::vector<int>& k, std::span<const double> alpha) {
  double acc = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) acc += k[j] * alpha[j];
  return acc;
}

// min over integers p of |i (x + p) + a|
double suspended_divisor(double x, std::complex<double> a) {
  double y = x + a.imag();
  y -= std::round(y);
  return std::hypot(a.real(), y);
}

void record(ConditionReport& rep, double divisor, double weight, double gamma, const std::vector<int>& k,
            const std::vector<int>& l) {
  double margin = divisor * weight / gamma;
  if (!rep.checked || margin < rep.worst_margin) {
    rep.worst_margin = margin;
    rep.worst_divisor = divisor;
    rep.k = k;
    rep.l = l;
  }
  rep.checked = true;
}

double mode_dot(std::span<const int> k, std::span<const double> alpha) {
  double acc = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) acc += k[j] * alpha[j];
  return acc;
}

void require_alpha(const FourierSeries& f, std::span<const double> alpha) {
  if (static_cast<int>(alpha.size()) != f.dim())
    fail(ErrorKind::DimensionMismatch, "frequency vector has the wrong size");
}

}  // namespace

DiophantineReport check_diophantine(const DiophantineParams& p, int kmax) {
  if (kmax < 1) throw std::invalid_argument("check_diophantine: kmax must be >= 1");
  if (!(p.gamma > 0.0) || !(p.tau > 0.0)) throw std::invalid_argument("check_diophantine: gamma, tau > 0");
  const int n = static_cast<int>(p.alpha.size());
  const int m = static_cast<int>(p.eigs.size());
  DiophantineReport rep;
  for_each_mode(n, kmax, true, [&](const std::vector<int>& k, int l1) {
    double x = dot(k, p.alpha);
    record(rep.dio1, suspended_divisor(x, 0.0), std::pow(l1, p.tau), p.gamma, k, {});
  });
  // l ranges over integer vectors with |l|_1 = 2 (l = 0 excluded)
  std::vector<std::vector<int>> ls;
  for (int i = 0; i < m; ++i) {
    for (int s : {2, -2}) {
      std::vector<int> l(m, 0);
      l[i] = s;
      ls.push_back(l);
    }
    for (int j = i + 1; j < m; ++j)
      for (int si : {1, -1})
        for (int sj : {1, -1}) {
          std::vector<int> l(m, 0);
          l[i] = si;
          l[j] = sj;
          ls.push_back(l);
        }
  }
  if (m > 0) {
    for_each_mode(n, kmax, false, [&](const std::vector<int>& k, int l1) {
      double x = dot(k, p.alpha);
      double w = std::pow(1.0 + l1, p.tau);
      for (int j = 0; j < m; ++j) {
        std::vector<int> l(m, 0);
        l[j] = 1;
        record(rep.dio2, suspended_divisor(x, p.eigs[j]), w, p.gamma, k, l);
      }
      for (const auto& l : ls) {
        std::complex<double> la = 0.0;
        for (int j = 0; j < m; ++j) la += static_cast<double>(l[j]) * p.eigs[j];
        record(rep.dio3, suspended_divisor(x, la), w, p.gamma, k, l);
      }
    });
  }
  for (ConditionReport* c : {&rep.dio1, &rep.dio2, &rep.dio3}) {
    c->checked_up_to = c->checked ? kmax : 0;
    c->ok = !c->checked || c->worst_margin >= 1.0;
  }
  detail::logger().debug("diophantine scan to |k| = {}: margins {} {} {}", kmax, rep.dio1.worst_margin,
                         rep.dio2.worst_margin, rep.dio3.worst_margin);
  return rep;
}

double estimate_gamma(std::span<const double> alpha, double tau, int kmax) {
  if (kmax < 1) throw std::invalid_argument("estimate_gamma: kmax must be >= 1");
  double gamma = std::numeric_limits<double>::infinity();
  std::vector<int> worst;
  for_each_mode(static_cast<int>(alpha.size()), kmax, true, [&](const std::vector<int>& k, int l1) {
    double d = suspended_divisor(dot(k, alpha), 0.0);
    if (d < kDivisorFloor) {
      std::string ks;
      for (int kj : k) ks += std::to_string(kj) + " ";
      fail(ErrorKind::ExactResonance, "k.alpha is an integer for k = " + ks);
    }
    gamma = std::min(gamma, d * std::pow(l1, tau));
  });
  return gamma;
}

Spectral Spectral::of(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) fail(ErrorKind::DimensionMismatch, "Spectral: A must be square");
  Spectral s;
  const auto m = A.rows();
  if (m == 0) return s;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) fail(ErrorKind::DefectiveMatrix, "eigendecomposition failed");
  s.P = es.eigenvectors();
  s.eigs = es.eigenvalues();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s.P);
  const auto& sv = svd.singularValues();
  s.condition = sv(m - 1) > 0.0 ? sv(0) / sv(m - 1) : std::numeric_limits<double>::infinity();
  if (!(s.condition <= 1e8))
    fail(ErrorKind::DefectiveMatrix, "eigenvector condition number " + sci(s.condition));
  s.Pinv = s.P.inverse();
  return s;
}

FourierSeries solve_tangent(const FourierSeries& g, std::span<const double> alpha) {
  require_alpha(g, alpha);
  const double scale = g.weighted_norm(0.0);
  FourierSeries f(g.dim(), g.order());
  if (scale == 0.0) return f;
  if (std::abs(g.average()) > kAverageTolerance * scale)
    fail(ErrorKind::NonZeroAverage, "average " + sci(g.average()) + " of " + sci(scale));
  auto gc = g.coeffs();
  auto fc = f.coeffs();
  const auto& ms = g.modes();
  for (std::size_t i = 1; i < gc.size(); ++i) {
    if (gc[i] == cplx(0.0)) continue;
    double d = mode_dot(ms.mode(i), alpha);
    if (std::abs(d) < kDivisorFloor) fail(ErrorKind::ResonantMode, "k.alpha below the divisor floor");
    fc[i] = gc[i] / cplx(0.0, d);
  }
  return f;
}

std::vector<FourierSeries> solve_normal(std::span<const FourierSeries> g, std::span<const double> alpha,
                                        const Eigen::MatrixXd& A) {
  return solve_normal(g, alpha, Spectral::of(A));
}

std::vector<FourierSeries> solve_normal(std::span<const FourierSeries> g, std::span<const double> alpha,
                                        const Spectral& A) {
  const int m = static_cast<int>(g.size());
  if (m != A.eigs.size()) fail(ErrorKind::DimensionMismatch, "solve_normal: system size");
  if (m == 0) return {};
  const int dim = g[0].dim();
  int order = 0;
  double scale = 0.0;
  for (const auto& ga : g) {
    require_alpha(ga, alpha);
    order = std::max(order, ga.order());
    scale = std::max(scale, ga.weighted_norm(0.0));
  }
  std::vector<FourierSeries> gin;
  for (const auto& ga : g) gin.push_back(ga.with_order(order));
  std::vector<FourierSeries> f(m, FourierSeries(dim, order));
  const auto& ms = gin[0].modes();
  cvec gk(m), ft(m);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    bool zero = true;
    for (int a = 0; a < m; ++a) {
      gk(a) = gin[a].coeffs()[i];
      zero = zero && gk(a) == cplx(0.0);
    }
    if (zero) continue;
    const double ka = mode_dot(ms.mode(i), alpha);
    cvec gt = A.Pinv * gk;
    for (int j = 0; j < m; ++j) {
      cplx d = cplx(0.0, ka) + A.eigs(j);
      if (std::abs(d) >= kDivisorFloor) {
        ft(j) = gt(j) / d;
        continue;
      }
      if (i == 0) {
        if (std::abs(gt(j)) > kAverageTolerance * scale)
          fail(ErrorKind::NonZeroAverage, "average in a kernel direction of A");
      } else if (gt(j) != cplx(0.0)) {
        fail(ErrorKind::SmallDivisor, "|ik.alpha + a| below the divisor floor");
      }
      ft(j) = 0.0;
    }
    cvec fk = A.P * ft;
    for (int a = 0; a < m; ++a) f[a].coeffs()[i] = i == 0 ? cplx(fk(a).real()) : fk(a);
  }
  for (auto& fa : f) fa.prune();
  return f;
}

SeriesMatrix solve_matrix(const SeriesMatrix& G, std::span<const double> alpha, const Eigen::MatrixXd& A) {
  return solve_matrix(G, alpha, Spectral::of(A));
}

SeriesMatrix solve_matrix(const SeriesMatrix& G, std::span<const double> alpha, const Spectral& A) {
  const int m = G.rows();
  if (G.cols() != m || m != A.eigs.size()) fail(ErrorKind::DimensionMismatch, "solve_matrix: system size");
  if (m == 0) return G;
  int order = 0;
  for (const auto& e : G.entries()) {
    require_alpha(e, alpha);
    order = std::max(order, e.order());
  }
  const int dim = G(0, 0).dim();
  const double scale = G.norm(0.0);
  SeriesMatrix Gin(m, m, dim, order);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) Gin(a, b) = G(a, b).with_order(order);
  SeriesMatrix F(m, m, dim, order);
  const auto& ms = Gin(0, 0).modes();
  Eigen::MatrixXcd Gk(m, m);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    bool zero = true;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        Gk(a, b) = Gin(a, b).coeffs()[i];
        zero = zero && Gk(a, b) == cplx(0.0);
      }
    if (zero) continue;
    const double ka = mode_dot(ms.mode(i), alpha);
    Eigen::MatrixXcd Gt = A.Pinv * Gk * A.P;
    Eigen::MatrixXcd Ft(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        cplx d = cplx(0.0, ka) + A.eigs(a) - A.eigs(b);
        if (std::abs(d) >= kDivisorFloor) {
          Ft(a, b) = Gt(a, b) / d;
          continue;
        }
        if (i == 0) {
          if (std::abs(Gt(a, b)) > kAverageTolerance * scale)
            fail(ErrorKind::NonZeroDiagonalAverage, "average of a conjugated diagonal entry");
        } else if (Gt(a, b) != cplx(0.0)) {
          fail(ErrorKind::SmallDivisor, "|ik.alpha + a_i - a_j| below the divisor floor");
        }
        Ft(a, b) = 0.0;
      }
    Eigen::MatrixXcd Fk = A.P * Ft * A.Pinv;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) F(a, b).coeffs()[i] = i == 0 ? cplx(Fk(a, b).real()) : Fk(a, b);
  }
  for (auto& e : F.entries()) e.prune();
  return F;
}

}  // namespace torusforge
