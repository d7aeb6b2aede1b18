#include "torusforge/newton.hpp"

#include <algorithm>
#include <cmath>

#include "log.hpp"
#include "torusforge/errors.hpp"

namespace torusforge {

namespace {

struct Tail {
  double tail = 0.0;
  double head = 0.0;
  void add(const FourierSeries& f) {
    tail = std::max(tail, tail_norm(f));
    head = std::max(head, head_norm(f));
  }
};

Tail state_tail(const NewtonState& x) {
  Tail t;
  for (const auto& f : x.g.phi_minus_id) t.add(f);
  for (const auto& f : x.g.R0) t.add(f);
  for (const auto& f : x.g.R1.entries()) t.add(f);
  for (int i = 0; i < x.u.n + x.u.m; ++i) {
    const auto& c = x.u.component(i);
    for (std::size_t k = 0; k < c.size(); ++k) t.add(c[k]);
  }
  return t;
}

// eta with A = -eta I, required by the Hamiltonian variants.
double dissipation_of(const VectorFieldJet& u) {
  const Eigen::Index m = u.A.rows();
  if (m == 0 || u.A.cols() != m) fail(ErrorKind::ClassViolation, "Hamiltonian variants need A = -eta I");
  const double eta = -u.A(0, 0);
  const Eigen::MatrixXd diff = u.A + eta * Eigen::MatrixXd::Identity(m, m);
  if (diff.cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, std::abs(eta)))
    fail(ErrorKind::ClassViolation, "Hamiltonian variants need A = -eta I");
  return eta;
}

double matrix_max(const Eigen::MatrixXd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

double min_eigen_gap(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::VectorXcd e = es.eigenvalues();
  double gap = HUGE_VAL;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (std::abs(e(i).imag()) > 1e-12 * std::max(1.0, std::abs(e(i))))
      fail(ErrorKind::EigenvalueCollision, "twist elimination needs real eigenvalues");
    gap = std::min(gap, std::abs(e(i)));
    for (Eigen::Index j = 0; j < i; ++j) gap = std::min(gap, std::abs(e(i) - e(j)));
  }
  return gap;
}

}  // namespace

double NewtonConfig::sigma_k(int k) const { return sigma / 6.0 * std::ldexp(1.0, -k); }

double NewtonConfig::s_k(int k) const {
  double s_cur = s;
  for (int j = 0; j < k; ++j) s_cur -= 3.0 * sigma_k(j);
  return s_cur;
}

NewtonState NewtonState::initial(const VectorFieldJet& u0, Flavor flavor) {
  return {Conjugacy::identity(u0.n, u0.m, u0.order(), flavor), u0, CounterTerm::zero(u0.n, u0.m)};
}

Certificate quadratic_certificate(std::span<const double> residuals, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k + 1 < residuals.size(); ++k) {
    const double a = residuals[k], b = residuals[k + 1];
    if (!(a > 0.0) || !(b > floor)) continue;
    xs.push_back(std::log(a));
    ys.push_back(std::log(b));
  }
  if (xs.size() < 2) fail(ErrorKind::InsufficientData, "need at least two residual pairs above the floor");
  const auto N = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd X(N, 2);
  Eigen::VectorXd y(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    X(i, 0) = xs[static_cast<std::size_t>(i)];
    X(i, 1) = 1.0;
    y(i) = ys[static_cast<std::size_t>(i)];
  }
  Eigen::Vector2d p = X.colPivHouseholderQr().solve(y);
  return {p(0), std::exp(p(1)), static_cast<int>(N)};
}

VectorFieldJet pulled_back_defect(const NewtonState& x, const VectorFieldJet& v) {
  return pull_back(x.g, v - x.lambda.field(v.order())) - x.u;
}

double relative_residual(const NewtonState& x, const VectorFieldJet& v) {
  const double scale = v.norm();
  return pulled_back_defect(x, v).norm() / (scale > 0.0 ? scale : 1.0);
}

NewtonResult newton_solve(Variant variant, const VectorFieldJet& v, NewtonState x0, const NewtonConfig& cfg) {
  NewtonResult res;
  res.x = std::move(x0);
  const double vnorm = v.norm() > 0.0 ? v.norm() : 1.0;
  LinearizeOptions opts;
  opts.pin_translation = cfg.pin_translation;
  opts.eps0 = cfg.eps0;
  opts.active = cfg.active;
  const double eta = variant == Variant::moser ? 0.0 : dissipation_of(res.x.u);
  for (int k = 0;; ++k) {
    const VectorFieldJet vdot = pulled_back_defect(res.x, v);
    const double r = vdot.norm() / vnorm;
    const Tail t = state_tail(res.x);
    res.residuals.push_back(r);
    res.tail_norms.push_back(t.tail);
    detail::logger().info("newton iteration {}: residual {:.3e}, tail {:.3e}, diagnostic width {:.4f}", k, r,
                          t.tail, cfg.s_k(k));
    if (!std::isfinite(r)) fail(ErrorKind::DivergenceDetected, "residual is not finite");
    if (t.tail > cfg.tail_tol * std::max(t.head, vnorm))
      fail(ErrorKind::TailBlowup, fmt::format("spectral tail {:.3e} (head {:.3e}, tol {:.1e})", t.tail, t.head, cfg.tail_tol) + " exceeds the monitor threshold");
    if (k > 0 && r > cfg.divergence_guard * res.residuals[static_cast<std::size_t>(k - 1)])
      fail(ErrorKind::DivergenceDetected, "residual grew from " + sci(res.residuals[k - 1]) + " to " +
                                              sci(r));
    if (r <= cfg.residual_tol) {
      res.iterations = k;
      break;
    }
    if (k >= cfg.max_iters)
      fail(ErrorKind::MaxItersExceeded, "residual " + sci(r) + " after " + std::to_string(k) +
                                            " iterations");
    LinearizedSolution sol;
    switch (variant) {
      case Variant::moser: sol = solve_linearized_moser_pulled(res.x.g, res.x.u, vdot, opts); break;
      case Variant::herman_dissipative:
        sol = solve_linearized_herman_dissipative(res.x.g, res.x.u, eta, vdot, opts);
        break;
      case Variant::russmann: sol = solve_linearized_russmann(res.x.g, res.x.u, eta, vdot, opts); break;
    }
    res.x.g = apply_update(res.x.g, sol.gdot);
    res.x.u += sol.delta_u;
    res.x.lambda += sol.delta_lambda;
    if (cfg.trace)
      res.trace.push_back({k, r, t.tail, sol.residual, sol.bound_ratio, res.x.lambda});
  }
  try {
    res.certificate = quadratic_certificate(res.residuals);
  } catch (const NumericalError& e) {
    if (e.kind() != ErrorKind::InsufficientData) throw;
  }
  return res;
}

TwistResult eliminate_twist_matrix(const VectorFieldJet& v, const VectorFieldJet& u0, const NewtonConfig& cfg,
                                   double b_tol, int max_outer) {
  return eliminate_twist_matrix(v, NewtonState::initial(u0), cfg, b_tol, max_outer);
}

TwistResult eliminate_twist_matrix(const VectorFieldJet& v, NewtonState x0, const NewtonConfig& cfg, double b_tol,
                                   int max_outer) {
  TwistResult out;
  out.A = x0.u.A;
  out.min_gap = min_eigen_gap(out.A);
  if (out.min_gap < 1e-6) fail(ErrorKind::EigenvalueCollision, "eigenvalue gap " + sci(out.min_gap));
  NewtonState x = std::move(x0);
  for (int outer = 0;; ++outer) {
    out.result = newton_solve(Variant::moser, v, x, cfg);
    out.outer_iterations = outer + 1;
    x = out.result.x;
    const Eigen::MatrixXd B = x.lambda.B;
    detail::logger().info("twist elimination step {}: |B| = {:.3e}", outer, matrix_max(B));
    if (matrix_max(B) <= b_tol) break;
    if (outer + 1 >= max_outer) fail(ErrorKind::NoConvergence, "twist elimination did not reach |B| <= tol");
    // dB/dA = -id: move the linear counter-term into the normal dynamics.
    out.A += B;
    out.min_gap = min_eigen_gap(out.A);
    if (out.min_gap < 1e-6) fail(ErrorKind::EigenvalueCollision, "eigenvalue gap " + sci(out.min_gap));
    x.u.A = out.A;
    for (Eigen::Index a = 0; a < B.rows(); ++a)
      for (Eigen::Index b = 0; b < B.cols(); ++b) {
        auto& c = x.u.normal[a].linear(static_cast<int>(b));
        c.set_average(c.average() + B(a, b));
      }
    x.lambda.B -= B;
  }
  out.result.x.u.A = out.A;
  return out;
}

VectorFieldJet shift_actions(const VectorFieldJet& v, std::span<const double> c) {
  if (static_cast<int>(c.size()) != v.m) fail(ErrorKind::DimensionMismatch, "action shift size");
  const int K = v.order();
  std::vector<RJet> w;
  for (int a = 0; a < v.m; ++a) {
    RJet j(v.n, K, v.m);
    j.constant_term().set_average(c[a]);
    j.linear(a).set_average(1.0);
    w.push_back(std::move(j));
  }
  VectorFieldJet out = v;
  for (int i = 0; i < v.n + v.m; ++i) out.component(i) = jet_contract(v.component(i), w);
  return out;
}

TranslationResult eliminate_translation_twist(const VectorFieldJet& v, const VectorFieldJet& u0,
                                              const NewtonConfig& cfg, double beta_tol, int max_outer) {
  if (u0.m < u0.n) fail(ErrorKind::RankDeficientTwist, "translated tori need m >= n");
  TranslationResult out;
  out.c.assign(u0.m, 0.0);
  NewtonConfig inner = cfg;
  inner.pin_translation = true;
  NewtonState x = NewtonState::initial(u0);
  for (int outer = 0;; ++outer) {
    out.twist = eliminate_twist_matrix(shift_actions(v, out.c), x, inner);
    out.outer_iterations = outer + 1;
    x = out.twist.result.x;
    Eigen::MatrixXd U1(x.u.n, x.u.m);
    for (int i = 0; i < x.u.n; ++i)
      for (int b = 0; b < x.u.m; ++b) U1(i, b) = x.u.u1(i, b).average();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(U1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.twist_singular_values = svd.singularValues();
    const auto& s = out.twist_singular_values;
    if (s.size() < x.u.n || s(s.size() - 1) < 1e-8 * std::max(1.0, s(0)))
      fail(ErrorKind::RankDeficientTwist, "averaged twist <u1> has rank below n");
    Eigen::Map<const Eigen::VectorXd> beta(x.lambda.beta.data(), x.u.n);
    const double bmax = beta.size() ? beta.cwiseAbs().maxCoeff() : 0.0;
    detail::logger().info("translation step {}: |beta| = {:.3e}", outer, bmax);
    if (bmax <= beta_tol) break;
    if (outer + 1 >= max_outer) fail(ErrorKind::NoConvergence, "action shift did not cancel beta");
    // d beta / d c = <u1>
    Eigen::VectorXd dc = svd.solve(Eigen::VectorXd(beta));
    for (int a = 0; a < x.u.m; ++a) out.c[a] -= dc(a);
  }
  out.b = out.twist.result.x.lambda.b;
  return out;
}

}  // namespace torusforge
