#include "torusforge/spinorbit.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <thread>

#include "log.hpp"

namespace torusforge {

FourierSeries SpinOrbitProblem::default_potential(int order) {
  return FourierSeries::from_modes(2, order, {{{1, 0}, {0.5, 0.0}}, {{1, -1}, {0.25, 0.0}}});
}

VectorFieldJet build_extended_field(const SpinOrbitProblem& p) {
  const int K = p.order;
  const FourierSeries f = p.f().with_order(K);
  VectorFieldJet v(2, 2, K);
  v.tangent[0].constant_term().set_average(p.alpha);
  v.tangent[0].linear(0).set_average(1.0);
  v.tangent[1].constant_term().set_average(1.0);
  for (int a = 0; a < 2; ++a) {
    v.normal[a].constant_term() = differentiate(f, a) * -p.epsilon;
    v.normal[a].linear(a).set_average(-p.eta);
  }
  auto& c = v.normal[0].constant_term();
  c.set_average(c.average() + p.eta * (p.nu - p.alpha));
  return v;
}

VectorFieldJet reference_field(const SpinOrbitProblem& p) {
  SpinOrbitProblem q = p;
  q.epsilon = 0.0;
  q.nu = p.alpha;
  VectorFieldJet u = build_extended_field(q);
  u.alpha = p.frequency();
  u.A = -p.eta * Eigen::MatrixXd::Identity(2, 2);
  return u;
}

TranslatedTorus translated_torus_normal_form(const SpinOrbitProblem& p) {
  NewtonConfig cfg = p.newton;
  cfg.active = {0};
  const VectorFieldJet u0 = reference_field(p);
  TranslatedTorus out;
  out.result = newton_solve(Variant::russmann, build_extended_field(p), NewtonState::initial(u0, Flavor::symplectic),
                            cfg);
  out.b = out.result.x.lambda.b[0];
  out.b_time = out.result.x.lambda.b[1];
  return out;
}

NuElimination eliminate_nu(const SpinOrbitProblem& p, double b_tol, int max_evaluations) {
  if (std::abs(p.eta) < kMinDissipation)
    fail(ErrorKind::StructurallyExcluded, "|eta| below " + sci(kMinDissipation) +
                                              ": b(nu) has no usable slope");
  NuElimination out;
  auto solve_at = [&](double nu) {
    SpinOrbitProblem q = p;
    q.nu = nu;
    ++out.evaluations;
    auto t = translated_torus_normal_form(q);
    detail::logger().debug("b({:.17g}) = {:.3e}", nu, t.b);
    return t;
  };
  auto accept = [&](double nu, TranslatedTorus t) {
    out.nu_star = nu;
    out.b_residual = t.b;
    out.torus = std::move(t);
    return out;
  };

  // Secant seeded at alpha with slope eta.
  double x0 = p.alpha;
  TranslatedTorus t0 = solve_at(x0);
  if (std::abs(t0.b) <= b_tol) return accept(x0, std::move(t0));
  double slope = p.eta;
  const double half_width = std::max(10.0 * p.epsilon, 1e-6);
  double lo = p.alpha - half_width, hi = p.alpha + half_width;
  while (out.evaluations < max_evaluations) {
    double x1 = x0 - t0.b / slope;
    if (!std::isfinite(x1)) break;
    if (x1 < lo || x1 > hi) {
      // Widen the trust bracket geometrically; give up once it dwarfs the perturbation scale.
      while ((x1 < lo || x1 > hi) && hi - lo < 1e3 * half_width) {
        lo = p.alpha - 2.0 * (p.alpha - lo);
        hi = p.alpha + 2.0 * (hi - p.alpha);
      }
      if (x1 < lo || x1 > hi)
        fail(ErrorKind::RootBracketingFailure, "secant step to nu = " + sci(x1) +
                                                   " leaves the widened bracket");
    }
    TranslatedTorus t1 = solve_at(x1);
    if (std::abs(t1.b) <= b_tol) return accept(x1, std::move(t1));
    if (x1 == x0 || t1.b == t0.b) break;
    slope = (t1.b - t0.b) / (x1 - x0);
    x0 = x1;
    t0 = std::move(t1);
  }
  fail(ErrorKind::NoConvergence, "secant on b(nu) did not reach |b| <= " + sci(b_tol));
}

namespace {

AttractorCurvePoint solve_point(SpinOrbitProblem p, bool keep_embedding) {
  AttractorCurvePoint pt;
  pt.eta = p.eta;
  pt.epsilon = p.epsilon;
  pt.nu_star = std::numeric_limits<double>::quiet_NaN();
  pt.b_residual = std::numeric_limits<double>::quiet_NaN();
  pt.certificate_exponent = std::numeric_limits<double>::quiet_NaN();
  try {
    auto r = eliminate_nu(p);
    pt.nu_star = r.nu_star;
    pt.b_residual = r.b_residual;
    pt.newton_iters = r.torus.result.iterations;
    if (r.torus.result.certificate) pt.certificate_exponent = r.torus.result.certificate->exponent;
    if (keep_embedding) pt.embedding = r.torus.result.x.g;
  } catch (const NumericalError& e) {
    pt.error = e.kind();
    pt.message = e.what();
  }
  return pt;
}

template <class Fn>
void run_indexed(std::size_t count, int jobs, Fn fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

}  // namespace

std::vector<AttractorCurvePoint> sweep_curve(const SpinOrbitProblem& base, std::span<const double> eta_grid, int jobs,
                                             bool keep_embedding) {
  const double eps[] = {base.epsilon};
  return sweep_surface(base, eps, eta_grid, jobs, keep_embedding);
}

std::vector<AttractorCurvePoint> sweep_surface(const SpinOrbitProblem& base, std::span<const double> epsilon_grid,
                                               std::span<const double> eta_grid, int jobs, bool keep_embedding) {
  std::vector<AttractorCurvePoint> out(epsilon_grid.size() * eta_grid.size());
  run_indexed(out.size(), jobs, [&](std::size_t i) {
    SpinOrbitProblem p = base;
    p.epsilon = epsilon_grid[i / eta_grid.size()];
    p.eta = eta_grid[i % eta_grid.size()];
    out[i] = solve_point(std::move(p), keep_embedding);
  });
  return out;
}

void write_sweep_csv(std::ostream& os, std::span<const AttractorCurvePoint> points) {
  os << "eta,epsilon,nu_star,b_residual,newton_iters,certificate_exponent\n";
  const auto old = os.precision(17);
  for (const auto& p : points)
    os << p.eta << ',' << p.epsilon << ',' << p.nu_star << ',' << p.b_residual << ',' << p.newton_iters << ','
       << p.certificate_exponent << '\n';
  os.precision(old);
}

}  // namespace torusforge
