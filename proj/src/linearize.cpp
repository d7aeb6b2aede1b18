#include "torusforge/linearize.hpp"

#include <algorithm>
#include <cmath>

#include "log.hpp"
#include "torusforge/cohomology.hpp"
#include "torusforge/errors.hpp"

namespace torusforge {

namespace {

// Mixed jet j^{0,1}: tangent order 0, normal orders 0 and 1.
struct Mixed {
  std::vector<FourierSeries> T0;
  std::vector<FourierSeries> N0;
  SeriesMatrix N1;

  static Mixed of(const VectorFieldJet& f) {
    Mixed out;
    for (int i = 0; i < f.n; ++i) out.T0.push_back(f.tangent0(i));
    out.N1 = SeriesMatrix(f.m, f.m, f.n, f.order());
    for (int a = 0; a < f.m; ++a) {
      out.N0.push_back(f.normal0(a));
      for (int b = 0; b < f.m; ++b) out.N1(a, b) = f.normal1(a, b);
    }
    return out;
  }

  Mixed& axpy(double s, const Mixed& x) {
    for (std::size_t i = 0; i < T0.size(); ++i) T0[i] += x.T0[i] * s;
    for (std::size_t a = 0; a < N0.size(); ++a) N0[a] += x.N0[a] * s;
    for (std::size_t e = 0; e < N1.entries().size(); ++e) N1.entries()[e] += x.N1.entries()[e] * s;
    return *this;
  }
};

Eigen::VectorXd averages(std::span<const FourierSeries> fs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(fs.size()));
  for (std::size_t i = 0; i < fs.size(); ++i) out(static_cast<Eigen::Index>(i)) = fs[i].average();
  return out;
}

std::vector<FourierSeries> minus_average(std::vector<FourierSeries> fs) {
  for (auto& f : fs) f.set_average(0.0);
  return fs;
}

double series_norm(std::span<const FourierSeries> fs) {
  double d = 0.0;
  for (const auto& f : fs) d = std::max(d, f.weighted_norm(0.0));
  return d;
}

void normalize_at_origin(std::vector<FourierSeries>& phi) {
  if (phi.empty()) return;
  std::vector<double> zero(static_cast<std::size_t>(phi.front().dim()), 0.0);
  for (auto& f : phi) f.set_average(f.average() - f.evaluate(zero));
}

// Tangent jacobian u1(i, b) of u as series.
SeriesMatrix tangent_linear(const VectorFieldJet& u) {
  SeriesMatrix Q(u.n, u.m, u.n, u.order());
  for (int i = 0; i < u.n; ++i)
    for (int b = 0; b < u.m; ++b) Q(i, b) = u.u1(i, b);
  return Q;
}

// The generator S of a gradient field D (least-squares on each mode).
FourierSeries gradient_potential(std::span<const FourierSeries> D) {
  const int n = D.front().dim();
  FourierSeries S(n, D.front().order());
  const auto& ms = S.modes();
  auto out = S.coeffs();
  for (std::size_t i = 1; i < ms.size(); ++i) {
    auto k = ms.mode(i);
    double k2 = 0.0;
    cplx acc = 0.0;
    for (int j = 0; j < n; ++j) {
      k2 += static_cast<double>(k[j]) * k[j];
      acc += cplx(0.0, -static_cast<double>(k[j])) * D[static_cast<std::size_t>(j)].coeffs()[i];
    }
    out[i] = acc / k2;
  }
  return S;
}

std::vector<FourierSeries> gradient(const FourierSeries& S) {
  std::vector<FourierSeries> out;
  for (int j = 0; j < S.dim(); ++j) out.push_back(differentiate(S, j));
  return out;
}

// -phi'^T
SeriesMatrix minus_transpose_jacobian(std::span<const FourierSeries> phi) {
  const int n = static_cast<int>(phi.size());
  SeriesMatrix R1(n, n, phi.front().dim(), phi.front().order());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) R1(a, b) = -differentiate(phi[b], a);
  return R1;
}

double vector_max(const std::vector<double>& x) {
  double d = 0.0;
  for (double v : x) d = std::max(d, std::abs(v));
  return d;
}

LinearizedSolution finish(const Conjugacy& g, const VectorFieldJet& u, const VectorFieldJet& vdot,
                          const VectorFieldJet& lambda_dot, InfinitesimalConjugacy gdot, CounterTerm dl) {
  (void)g;
  LinearizedSolution sol;
  VectorFieldJet du = vdot - lambda_dot - lie_bracket(u, gdot.field());
  sol.residual = du.mixed_jet_norm();
  sol.delta_u = du.without_mixed_jet();
  sol.delta_u.alpha.clear();
  sol.delta_u.A.resize(0, 0);
  sol.gdot = std::move(gdot);
  sol.delta_lambda = std::move(dl);
  const double scale = vdot.norm();
  if (scale > 0.0)
    sol.bound_ratio = std::max({sol.gdot.norm(), sol.delta_u.norm(), sol.delta_lambda.norm()}) / scale;
  detail::logger().debug("linearized step: |vdot| {:.3e}, bound ratio {:.3e}, mixed defect {:.3e}", scale,
                         sol.bound_ratio, sol.residual);
  return sol;
}

void require_shapes(const Conjugacy& g, const VectorFieldJet& u, const VectorFieldJet& vdot) {
  if (u.n != g.n || u.m != g.m || vdot.n != g.n || vdot.m != g.m)
    fail(ErrorKind::DimensionMismatch, "linearized solve: shapes of g, u and the right-hand side differ");
  if (static_cast<int>(u.alpha.size()) != u.n)
    throw std::invalid_argument("linearized solve: u carries no frequency vector");
}

}  // namespace

VectorFieldJet InfinitesimalConjugacy::field() const {
  const int n = static_cast<int>(phi.size());
  const int m = static_cast<int>(R0.size());
  const int order = n > 0 ? phi.front().order() : R0.front().order();
  VectorFieldJet f(n, m, order);
  for (int i = 0; i < n; ++i) f.tangent[i].constant_term() = phi[i];
  for (int a = 0; a < m; ++a) {
    f.normal[a].constant_term() = R0[a];
    for (int b = 0; b < m; ++b) f.normal[a].linear(b) = R1(a, b);
  }
  return f;
}

double InfinitesimalConjugacy::norm() const {
  return std::max({series_norm(phi), series_norm(R0), R1.norm(0.0), vector_max(xi)});
}

Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& A) {
  const Eigen::Index m = A.cols();
  if (m == 0) return Eigen::MatrixXd(0, 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  return svd.matrixV().rightCols(m - rank);
}

std::vector<Eigen::MatrixXd> commutant_basis(const Eigen::MatrixXd& A) {
  const Eigen::Index m = A.rows();
  if (m == 0) return {};
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  // vec(AB - BA) = (I (x) A - A^T (x) I) vec(B), column-major vec
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m * m, m * m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      L.block(i * m, j * m, m, m) += I(i, j) * A;
      L.block(i * m, j * m, m, m) -= A(j, i) * I;
    }
  Eigen::MatrixXd N = kernel_basis(L);
  std::vector<Eigen::MatrixXd> out;
  for (Eigen::Index c = 0; c < N.cols(); ++c)
    out.push_back(Eigen::Map<const Eigen::MatrixXd>(N.col(c).data(), m, m));
  return out;
}

LinearizedSolution solve_linearized_moser(const Conjugacy& g, const VectorFieldJet& u,
                                          const VectorFieldJet& delta_v, const LinearizeOptions& opts) {
  return solve_linearized_moser_pulled(g, u, pull_back(g, delta_v), opts);
}

LinearizedSolution solve_linearized_moser_pulled(const Conjugacy& g, const VectorFieldJet& u,
                                                 const VectorFieldJet& vdot, const LinearizeOptions& opts) {
  require_shapes(g, u, vdot);
  const double dist = g.distance_from_identity();
  if (dist > opts.eps0)
    fail(ErrorKind::NonInvertibleCounterTermSystem,
         "|g - id|_0 = " + sci(dist) + " exceeds the neighbourhood gate");
  const int n = u.n, m = u.m, K = u.order();
  const auto& alpha = u.alpha;
  const Eigen::MatrixXd& A = u.A;
  const Spectral eigA = Spectral::of(A);
  const Spectral minusA = Spectral::of(-A);
  Eigen::MatrixXd pinv_minusA = (-A).completeOrthogonalDecomposition().pseudoInverse();

  // Spectral projections onto ker A and onto the commutant.
  const double group_tol = 1e-9 * (1.0 + (eigA.eigs.size() ? eigA.eigs.cwiseAbs().maxCoeff() : 0.0));
  auto same = [&](Eigen::Index i, Eigen::Index j) { return std::abs(eigA.eigs(i) - eigA.eigs(j)) <= group_tol; };
  Eigen::MatrixXd Kb = opts.pin_translation ? Eigen::MatrixXd::Identity(m, m) : kernel_basis(A);
  auto Bb = commutant_basis(A);
  auto n0_coords = [&](const Eigen::VectorXd& avg) -> Eigen::VectorXd {
    if (opts.pin_translation) return avg;
    Eigen::VectorXcd y = eigA.Pinv * avg.cast<cplx>();
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (std::abs(eigA.eigs(i)) > group_tol) y(i) = 0.0;
    return Kb.transpose() * (eigA.P * y).real();
  };
  auto n1_coords = [&](const Eigen::MatrixXd& G0) -> Eigen::VectorXd {
    Eigen::MatrixXcd y = eigA.Pinv * G0.cast<cplx>() * eigA.P;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (Eigen::Index j = 0; j < y.cols(); ++j)
        if (!same(i, j)) y(i, j) = 0.0;
    Eigen::MatrixXd proj = (eigA.P * y * eigA.Pinv).real();
    Eigen::VectorXd c(static_cast<Eigen::Index>(Bb.size()));
    for (std::size_t i = 0; i < Bb.size(); ++i) c(static_cast<Eigen::Index>(i)) = (Bb[i].array() * proj.array()).sum();
    return c;
  };

  const SeriesMatrix Q = tangent_linear(u);
  // Kc[a][c](b) = d^2 u_N,a / dr_c dr_b
  std::vector<std::vector<RJet>> Kc(m);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) Kc[a].push_back(u.normal[a].d_r(c));

  auto normal0 = [&](const Mixed& h) {
    Eigen::VectorXd avg = averages(h.N0);
    auto R0 = m > 0 ? solve_normal(minus_average(h.N0), alpha, minusA) : std::vector<FourierSeries>{};
    if (!opts.pin_translation) {
      Eigen::VectorXd c = pinv_minusA * avg;
      for (int a = 0; a < m; ++a) R0[a].set_average(R0[a].average() + c(a));
    }
    return R0;
  };
  auto obstruction = [&](const Mixed& h) {
    auto R0 = normal0(h);
    Eigen::VectorXd o2(n);
    for (int i = 0; i < n; ++i) {
      o2(i) = h.T0[i].average();
      for (int b = 0; b < m; ++b) o2(i) += mean_product(Q(i, b), R0[b]);
    }
    Eigen::MatrixXd G0(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double acc = h.N1(a, b).average();
        for (int j = 0; j < n; ++j) acc -= mean_product(differentiate(R0[a], j), Q(j, b));
        for (int c = 0; c < m; ++c) acc += mean_product(Kc[a][c].linear(b), R0[c]);
        G0(a, b) = acc;
      }
    Eigen::VectorXd o1 = n0_coords(averages(h.N0));
    Eigen::VectorXd o3 = n1_coords(G0);
    Eigen::VectorXd out(o1.size() + o2.size() + o3.size());
    out << o1, o2, o3;
    return out;
  };

  std::vector<CounterTerm> basis;
  for (int j = 0; j < n; ++j) {
    auto e = CounterTerm::zero(n, m);
    e.beta[j] = 1.0;
    basis.push_back(e);
  }
  for (Eigen::Index c = 0; c < Kb.cols(); ++c) {
    auto e = CounterTerm::zero(n, m);
    for (int a = 0; a < m; ++a) e.b[a] = Kb(a, c);
    basis.push_back(e);
  }
  for (const auto& B : Bb) {
    auto e = CounterTerm::zero(n, m);
    e.B = B;
    basis.push_back(e);
  }
  std::vector<VectorFieldJet> lam;
  std::vector<Mixed> lam_mixed;
  for (const auto& e : basis) {
    lam.push_back(pull_back(g, e.field(K)));
    lam_mixed.push_back(Mixed::of(lam.back()));
  }
  const Mixed h0 = Mixed::of(vdot);
  const Eigen::VectorXd F0 = obstruction(h0);
  Eigen::MatrixXd M(F0.size(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = obstruction(lam_mixed[i]);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(M.cols());
  if (M.size() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (M.rows() != M.cols() || s(s.size() - 1) < 1e-8 * s(0))
      fail(ErrorKind::NonInvertibleCounterTermSystem,
           "averaged counter-term system is degenerate (singular value ratio " +
               sci(s(s.size() - 1) / s(0)) + ")");
    x = svd.solve(F0);
  }

  Mixed h = h0;
  VectorFieldJet lambda_dot(n, m, K);
  CounterTerm dl = CounterTerm::zero(n, m);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double xi = x(static_cast<Eigen::Index>(i));
    h.axpy(-xi, lam_mixed[i]);
    VectorFieldJet scaled = lam[i];
    scaled *= xi;
    lambda_dot += scaled;
    CounterTerm e = basis[i];
    for (auto& v : e.beta) v *= xi;
    for (auto& v : e.b) v *= xi;
    e.B *= xi;
    dl += e;
  }

  InfinitesimalConjugacy gdot;
  gdot.R0 = normal0(h);
  for (int i = 0; i < n; ++i) {
    FourierSeries rhs = h.T0[i];
    for (int b = 0; b < m; ++b) rhs += multiply(Q(i, b), gdot.R0[b]);
    rhs.set_average(0.0);
    gdot.phi.push_back(solve_tangent(rhs, alpha));
  }
  normalize_at_origin(gdot.phi);
  SeriesMatrix G = h.N1;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      for (int j = 0; j < n; ++j) G(a, b) -= multiply(differentiate(gdot.R0[a], j), Q(j, b));
      for (int c = 0; c < m; ++c) G(a, b) += multiply(Kc[a][c].linear(b), gdot.R0[c]);
    }
  if (m > 0) {
    // Remove the (already negligible) commutant part of the average before dividing.
    Eigen::MatrixXd G0(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) G0(a, b) = G(a, b).average();
    Eigen::VectorXd c = n1_coords(G0);
    for (std::size_t i = 0; i < Bb.size(); ++i)
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          G(a, b).set_average(G(a, b).average() - c(static_cast<Eigen::Index>(i)) * Bb[i](a, b));
    gdot.R1 = solve_matrix(G, alpha, minusA);
  } else {
    gdot.R1 = SeriesMatrix(0, 0, n, K);
  }
  return finish(g, u, vdot, lambda_dot, std::move(gdot), std::move(dl));
}

LinearizedSolution solve_linearized_herman_dissipative(const Conjugacy& g, const VectorFieldJet& u, double eta,
                                                       const VectorFieldJet& vdot, const LinearizeOptions& opts) {
  require_shapes(g, u, vdot);
  if (g.flavor != Flavor::exact_symplectic)
    fail(ErrorKind::ClassViolation, "the dissipative Herman solver needs an exact-symplectic conjugacy");
  const int n = u.n, K = u.order();
  if (u.m != n) fail(ErrorKind::DimensionMismatch, "Hamiltonian classes need m == n");
  const auto& alpha = u.alpha;
  const Eigen::MatrixXd etaI = eta * Eigen::MatrixXd::Identity(n, n);
  const SeriesMatrix Q = tangent_linear(u);
  const Mixed vd = Mixed::of(vdot);
  const double scale = vdot.norm(), ambient = u.norm();

  const Eigen::VectorXd avgN0 = averages(vd.N0);
  if (avgN0.size() && avgN0.cwiseAbs().maxCoeff() > 1e-9 * scale + 1e-13 * ambient)
    fail(ErrorKind::ClassViolation,
         "order-0 normal average " + sci(avgN0.cwiseAbs().maxCoeff()) + " is not Hamiltonian");

  std::vector<VectorFieldJet> lam;
  std::vector<Mixed> lm;
  for (int j = 0; j < n; ++j) {
    auto e = CounterTerm::zero(n, n);
    e.beta[j] = 1.0;
    lam.push_back(pull_back(g, e.field(K)));
    lm.push_back(Mixed::of(lam.back()));
  }
  auto D0 = solve_normal(minus_average(vd.N0), alpha, etaI);
  std::vector<std::vector<FourierSeries>> Dj;
  for (int j = 0; j < n; ++j) Dj.push_back(solve_normal(minus_average(lm[j].N0), alpha, etaI));

  Eigen::MatrixXd lhs(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    rhs(i) = vd.T0[i].average();
    for (int b = 0; b < n; ++b) rhs(i) += mean_product(Q(i, b), D0[b]);
    for (int j = 0; j < n; ++j) {
      lhs(i, j) = lm[j].T0[i].average();
      for (int b = 0; b < n; ++b) lhs(i, j) += mean_product(Q(i, b), Dj[j][b]);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(lhs, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s(n - 1) < 1e-8 * s(0))
    fail(ErrorKind::NonInvertibleCounterTermSystem, "frequency counter-term system is degenerate");
  Eigen::VectorXd beta = svd.solve(rhs);

  std::vector<FourierSeries> D = D0;
  Mixed h = vd;
  VectorFieldJet lambda_dot(n, n, K);
  for (int j = 0; j < n; ++j) {
    for (int b = 0; b < n; ++b) D[b] -= Dj[j][b] * beta(j);
    h.axpy(-beta(j), lm[j]);
    VectorFieldJet scaled = lam[j];
    scaled *= beta(j);
    lambda_dot += scaled;
  }
  InfinitesimalConjugacy gdot;
  gdot.S = gradient_potential(D);
  gdot.R0 = gradient(gdot.S);
  gdot.xi.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    FourierSeries r = h.T0[i];
    for (int b = 0; b < n; ++b) r += multiply(Q(i, b), gdot.R0[b]);
    r.set_average(0.0);
    gdot.phi.push_back(solve_tangent(r, alpha));
  }
  normalize_at_origin(gdot.phi);
  gdot.R1 = minus_transpose_jacobian(gdot.phi);

  CounterTerm dl = CounterTerm::zero(n, n);
  for (int j = 0; j < n; ++j) dl.beta[j] = beta(j);
  auto sol = finish(g, u, vdot, lambda_dot, std::move(gdot), std::move(dl));
  const double tol = opts.class_tol * scale + 1e-13 * ambient;
  if (sol.residual > tol)
    fail(ErrorKind::ClassViolation, "normal order-1 equation fails by " + sci(sol.residual) +
                                        " (tolerance " + sci(tol) + "); input is not Hamiltonian");
  return sol;
}

LinearizedSolution solve_linearized_russmann(const Conjugacy& g, const VectorFieldJet& u, double eta,
                                             const VectorFieldJet& vdot, const LinearizeOptions& opts) {
  require_shapes(g, u, vdot);
  if (g.flavor == Flavor::general) fail(ErrorKind::ClassViolation, "the Russmann solver needs a symplectic conjugacy");
  const int n = u.n, K = u.order();
  if (u.m != n) fail(ErrorKind::DimensionMismatch, "Hamiltonian classes need m == n");
  const auto& alpha = u.alpha;
  std::vector<int> active = opts.active;
  if (active.empty())
    for (int i = 0; i < n; ++i) active.push_back(i);
  std::vector<bool> is_active(n, false);
  for (int i : active) {
    if (i < 0 || i >= n) throw std::invalid_argument("active component out of range");
    is_active[i] = true;
  }
  const Eigen::MatrixXd eta1 = Eigen::MatrixXd::Constant(1, 1, eta);
  auto resolvent = [&](const FourierSeries& f) {
    std::vector<FourierSeries> one{f};
    return solve_normal(one, alpha, eta1).front();
  };

  const SeriesMatrix Q = tangent_linear(u);
  const Mixed vd = Mixed::of(vdot);
  const Eigen::VectorXd avgN0 = averages(vd.N0);
  // dv(a, i) = d_a v_i
  std::vector<std::vector<FourierSeries>> dv(n);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i) dv[a].push_back(differentiate(g.phi_minus_id[i], a));

  std::vector<FourierSeries> S0;
  std::vector<std::vector<FourierSeries>> M(n);
  for (int a = 0; a < n; ++a) {
    FourierSeries r = vd.N0[a];
    r.set_average(0.0);
    for (int i = 0; i < n; ++i) r -= dv[a][i] * avgN0(i);
    S0.push_back(resolvent(r));
    for (int i = 0; i < n; ++i) M[a].push_back(resolvent(dv[a][i]));
  }
  Eigen::MatrixXd T(n, n), Qavg(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    rhs(i) = -vd.T0[i].average();
    for (int b = 0; b < n; ++b) rhs(i) -= mean_product(Q(i, b), S0[b]);
    for (int k = 0; k < n; ++k) {
      Qavg(i, k) = Q(i, k).average();
      T(i, k) = Qavg(i, k);
      for (int b = 0; b < n; ++b) T(i, k) += eta * mean_product(Q(i, b), M[b][k]);
    }
  }
  const auto na = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd Ta(na, na), Qa(na, na);
  Eigen::VectorXd ra(na);
  for (Eigen::Index p = 0; p < na; ++p) {
    ra(p) = rhs(active[p]);
    for (Eigen::Index q = 0; q < na; ++q) {
      Ta(p, q) = T(active[p], active[q]);
      Qa(p, q) = Qavg(active[p], active[q]);
    }
  }
  const double det = Ta.determinant(), det0 = Qa.determinant();
  if (!(std::abs(det) >= 0.5 * std::abs(det0)) || det == 0.0)
    fail(ErrorKind::DegenerateTorsion, "torsion determinant " + sci(det) + " against averaged " +
                                           sci(det0));
  Eigen::VectorXd xa = Ta.partialPivLu().solve(ra);
  std::vector<double> xidot(n, 0.0);
  for (Eigen::Index p = 0; p < na; ++p) xidot[active[p]] = xa(p);

  std::vector<double> db(n);
  for (int a = 0; a < n; ++a) db[a] = avgN0(a) - eta * xidot[a];
  std::vector<FourierSeries> D = S0;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i) D[a] += M[a][i] * (eta * xidot[i]);

  InfinitesimalConjugacy gdot;
  gdot.S = gradient_potential(D);
  gdot.xi = xidot;
  gdot.R0 = gradient(gdot.S);
  for (int a = 0; a < n; ++a) gdot.R0[a].set_average(xidot[a]);
  const double tol = opts.class_tol * vdot.norm() + 1e-13 * u.norm();
  for (int i = 0; i < n; ++i) {
    FourierSeries r = vd.T0[i];
    for (int b = 0; b < n; ++b) r += multiply(Q(i, b), gdot.R0[b]);
    if (!is_active[i]) {
      if (r.weighted_norm(0.0) > tol)
        fail(ErrorKind::ClassViolation, "inactive tangent component " + std::to_string(i) + " is forced by " +
                                            sci(r.weighted_norm(0.0)));
      gdot.phi.push_back(FourierSeries(n, K));
      continue;
    }
    r.set_average(0.0);
    gdot.phi.push_back(solve_tangent(r, alpha));
  }
  normalize_at_origin(gdot.phi);
  gdot.R1 = minus_transpose_jacobian(gdot.phi);

  CounterTerm dl = CounterTerm::zero(n, n);
  dl.b = db;
  VectorFieldJet lambda_dot = pull_back(g, dl.field(K));
  auto sol = finish(g, u, vdot, lambda_dot, std::move(gdot), std::move(dl));
  sol.torsion_det = det;
  return sol;
}

Conjugacy apply_update(const Conjugacy& g, const InfinitesimalConjugacy& gdot) {
  const int n = g.n, m = g.m;
  Conjugacy out = g;
  auto along = [&](const FourierSeries& f) {
    FourierSeries acc(f.dim(), f.order());
    for (int j = 0; j < n; ++j) acc += multiply(differentiate(f, j), gdot.phi[j]);
    return acc;
  };
  for (int i = 0; i < n; ++i) out.phi_minus_id[i] += gdot.phi[i] + along(g.phi_minus_id[i]);
  normalize_at_origin(out.phi_minus_id);
  if (g.flavor == Flavor::general) {
    for (int a = 0; a < m; ++a) {
      out.R0[a] += along(g.R0[a]);
      for (int b = 0; b < m; ++b) out.R0[a] += multiply(g.R1(a, b), gdot.R0[b]);
      for (int b = 0; b < m; ++b) {
        out.R1(a, b) += along(g.R1(a, b));
        for (int c = 0; c < m; ++c) out.R1(a, b) += multiply(g.R1(a, c), gdot.R1(c, b));
      }
    }
    for (auto& f : out.phi_minus_id) f.prune();
    for (auto& f : out.R0) f.prune();
    for (auto& f : out.R1.entries()) f.prune();
    return out;
  }
  // rho = dS + xi; the composed generator is S + Sdot + rho.phidot up to a constant.
  FourierSeries dS = gdot.S;
  for (int j = 0; j < n; ++j) {
    FourierSeries rho = differentiate(g.S, j);
    rho.set_average(g.xi[j]);
    dS += multiply(rho, gdot.phi[j]);
  }
  out.S += dS;
  out.S.set_average(0.0);
  out.S.prune();
  for (auto& f : out.phi_minus_id) f.prune();
  for (int j = 0; j < n; ++j) out.xi[j] += gdot.xi.empty() ? 0.0 : gdot.xi[j];
  if (out.flavor == Flavor::exact_symplectic && vector_max(out.xi) > 0.0)
    fail(ErrorKind::ClassViolation, "update would give an exact-symplectic map a translation");
  out.refresh();
  return out;
}

}  // namespace torusforge
