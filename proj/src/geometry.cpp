#include "torusforge/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "gridjet.hpp"
#include "log.hpp"
#include "torusforge/errors.hpp"

namespace torusforge {

using detail::GridJet;
using detail::GridMatrix;
using detail::Values;

namespace {

constexpr double kSingularFloor = 1e-8;

struct Grid {
  int n;
  int points;
  Eigen::Index count;
  std::vector<double> coords;

  Grid(int n_, int order) : n(n_), points(oversampled_grid_points(order)) {
    coords = grid_coordinates(n, points);
    count = static_cast<Eigen::Index>(coords.size()) / n;
  }
  Grid(int n_, int points_, bool) : n(n_), points(points_) {
    coords = grid_coordinates(n, points);
    count = static_cast<Eigen::Index>(coords.size()) / n;
  }

  // coords + displacement
  std::vector<double> shifted(const std::vector<Values>& disp) const {
    std::vector<double> x = coords;
    for (Eigen::Index p = 0; p < count; ++p)
      for (int j = 0; j < n; ++j) x[p * n + j] += disp[j][p];
    return x;
  }
};

std::vector<Values> sample_all(std::span<const FourierSeries> fs, int points) {
  std::vector<Values> out;
  for (const auto& f : fs) out.push_back(detail::sample(f, points));
  return out;
}

std::vector<Values> sample_all_at(std::span<const FourierSeries> fs, std::span<const double> x) {
  std::vector<Values> out;
  for (const auto& f : fs) out.push_back(detail::sample_at(f, x));
  return out;
}

GridMatrix sample_matrix(const SeriesMatrix& M, int points) {
  GridMatrix out;
  out.rows = M.rows();
  out.cols = M.cols();
  for (const auto& e : M.entries()) out.e.push_back(detail::sample(e, points));
  return out;
}

GridMatrix sample_matrix_at(const SeriesMatrix& M, std::span<const double> x) {
  GridMatrix out;
  out.rows = M.rows();
  out.cols = M.cols();
  for (const auto& e : M.entries()) out.e.push_back(detail::sample_at(e, x));
  return out;
}

// phi'(theta) = I + dv on the grid
GridMatrix phi_jacobian(const Conjugacy& g, const Grid& grid) {
  GridMatrix J(g.n, g.n, grid.count);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      J(i, j) = detail::sample(differentiate(g.phi_minus_id[i], j), grid.points);
      if (i == j) J(i, j) += 1.0;
    }
  return J;
}

GridMatrix checked_inverse(const GridMatrix& M, ErrorKind kind, const char* what) {
  double smin = 0.0;
  GridMatrix inv = detail::inverse(M, &smin);
  if (!(smin > kSingularFloor)) fail(kind, std::string(what) + " singular on the grid, min singular value " + sci(smin));
  return inv;
}

GridMatrix transpose(const GridMatrix& M) {
  GridMatrix T;
  T.rows = M.cols;
  T.cols = M.rows;
  T.e.resize(M.e.size());
  for (int i = 0; i < M.rows; ++i)
    for (int j = 0; j < M.cols; ++j) T(j, i) = M(i, j);
  return T;
}

// The jets r -> c_a + sum_b M_ab r_b used for affine substitution.
std::vector<GridJet> affine_substitution(const std::vector<Values>& c, const GridMatrix& M) {
  std::vector<GridJet> w;
  const int m = M.rows;
  for (int a = 0; a < m; ++a) {
    std::vector<Values> row;
    for (int b = 0; b < M.cols; ++b) row.push_back(M(a, b));
    w.push_back(GridJet::affine(M.cols, c[a], row));
  }
  return w;
}

// Displacement w = psi - id on the grid, psi = (id + v)^{-1}.
std::vector<Values> invert_on_grid(std::span<const FourierSeries> v, const Grid& grid) {
  const int n = grid.n;
  std::vector<Values> w;
  for (const auto& vj : v) w.push_back(-detail::sample(vj, grid.points));
  double prev = HUGE_VAL;
  for (int it = 0; it < 200; ++it) {
    auto x = grid.shifted(w);
    double diff = 0.0, size = 0.0;
    for (int j = 0; j < n; ++j) {
      Values next = -detail::sample_at(v[j], x);
      diff = std::max(diff, (next - w[j]).abs().maxCoeff());
      size = std::max(size, next.abs().maxCoeff());
      w[j] = std::move(next);
    }
    if (!std::isfinite(diff)) fail(ErrorKind::ContractionFailure, "torus map inversion produced non-finite values");
    if (diff <= 1e-15 * std::max(1.0, size)) return w;
    if (it > 3 && diff > prev) fail(ErrorKind::ContractionFailure, "fixed-point iteration is not contracting");
    prev = diff;
  }
  fail(ErrorKind::ContractionFailure, "fixed-point iteration did not settle in 200 steps");
}

std::vector<FourierSeries> unsample_all(const std::vector<Values>& vs, int dim, int points, int order) {
  std::vector<FourierSeries> out;
  for (const auto& v : vs) out.push_back(detail::unsample(v, dim, points, order));
  return out;
}

int field_order(const VectorFieldJet& u) { return u.order(); }

VectorFieldJet assemble(int n, int m, const std::vector<GridJet>& comps, int points, int order,
                        const VectorFieldJet& meta) {
  VectorFieldJet out(n, m, order);
  for (int i = 0; i < n + m; ++i) out.component(i) = detail::unsample(comps[i], n, points, order);
  out.alpha = meta.alpha;
  out.A = meta.A;
  return out;
}

// g'(theta, r) u(theta, r) as grid jets at the grid points theta_p.
std::vector<GridJet> apply_derivative(const Conjugacy& g, const std::vector<GridJet>& U, const Grid& grid) {
  const int n = g.n, m = g.m;
  GridMatrix J = phi_jacobian(g, grid);
  GridMatrix R1 = sample_matrix(g.R1, grid.points);
  std::vector<GridJet> out;
  for (int i = 0; i < n; ++i) {
    GridJet t(m, grid.count);
    for (int j = 0; j < n; ++j) t += J(i, j) * U[j];
    out.push_back(std::move(t));
  }
  for (int a = 0; a < m; ++a) {
    GridJet t(m, grid.count);
    for (int j = 0; j < n; ++j) {
      std::vector<Values> lin;
      for (int c = 0; c < m; ++c) lin.push_back(detail::sample(differentiate(g.R1(a, c), j), grid.points));
      GridJet L = GridJet::affine(m, detail::sample(differentiate(g.R0[a], j), grid.points), lin);
      t += detail::mul(L, U[j]);
    }
    for (int b = 0; b < m; ++b) t += R1(a, b) * U[n + b];
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

Conjugacy Conjugacy::identity(int n, int m, int order, Flavor flavor) {
  Conjugacy g;
  g.flavor = flavor;
  g.n = n;
  g.m = m;
  g.phi_minus_id.assign(n, FourierSeries(n, order));
  g.R0.assign(m, FourierSeries(n, order));
  g.R1 = SeriesMatrix::identity(m, n, order);
  if (flavor != Flavor::general) {
    if (m != n) throw std::invalid_argument("symplectic conjugacies need m == n");
    g.S = FourierSeries(n, order);
    g.xi.assign(n, 0.0);
  }
  return g;
}

Conjugacy Conjugacy::from_generator(std::vector<FourierSeries> phi_minus_id, FourierSeries S,
                                    std::vector<double> xi, Flavor flavor) {
  const int n = static_cast<int>(phi_minus_id.size());
  if (flavor == Flavor::general) throw std::invalid_argument("from_generator needs a symplectic flavor");
  if (xi.empty()) xi.assign(n, 0.0);
  if (static_cast<int>(xi.size()) != n) fail(ErrorKind::DimensionMismatch, "xi size");
  if (flavor == Flavor::exact_symplectic && std::any_of(xi.begin(), xi.end(), [](double x) { return x != 0.0; }))
    throw std::invalid_argument("exact-symplectic conjugacies have xi = 0");
  Conjugacy g = identity(n, n, S.order(), flavor);
  g.phi_minus_id = std::move(phi_minus_id);
  g.S = std::move(S);
  g.xi = std::move(xi);
  g.refresh();
  return g;
}

int Conjugacy::order() const {
  if (!phi_minus_id.empty()) return phi_minus_id.front().order();
  return R0.empty() ? 0 : R0.front().order();
}

void Conjugacy::refresh() {
  if (flavor == Flavor::general) return;
  const int K = order();
  Grid grid(n, K);
  GridMatrix JTinv = checked_inverse(transpose(phi_jacobian(*this, grid)), ErrorKind::SingularR1, "phi'");
  std::vector<Values> rho;
  for (int j = 0; j < n; ++j) rho.push_back(detail::sample(differentiate(S, j), grid.points) + xi[j]);
  for (int a = 0; a < n; ++a) {
    Values r0 = Values::Zero(grid.count);
    for (int b = 0; b < n; ++b) {
      r0 += JTinv(a, b) * rho[b];
      R1(a, b) = detail::unsample(JTinv(a, b), n, grid.points, K);
    }
    R0[a] = detail::unsample(r0, n, grid.points, K);
  }
}

double Conjugacy::distance_from_identity() const {
  double d = 0.0;
  for (const auto& v : phi_minus_id) d = std::max(d, v.weighted_norm(0.0));
  for (const auto& r : R0) d = std::max(d, r.weighted_norm(0.0));
  SeriesMatrix D = R1;
  for (int a = 0; a < m; ++a) D(a, a).set_average(D(a, a).average() - 1.0);
  return std::max(d, D.norm(0.0));
}

std::vector<double> Conjugacy::evaluate(std::span<const double> theta, std::span<const double> r) const {
  std::vector<double> out(n + m);
  for (int i = 0; i < n; ++i) out[i] = theta[i] + phi_minus_id[i].evaluate(theta);
  for (int a = 0; a < m; ++a) {
    double acc = R0[a].evaluate(theta);
    for (int b = 0; b < m; ++b) acc += R1(a, b).evaluate(theta) * r[b];
    out[n + a] = acc;
  }
  return out;
}

Eigen::MatrixXd Conjugacy::jacobian(std::span<const double> theta, std::span<const double> r) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + m, n + m);
  for (int i = 0; i < n; ++i) {
    auto gr = phi_minus_id[i].gradient(theta);
    for (int j = 0; j < n; ++j) J(i, j) = (i == j ? 1.0 : 0.0) + gr[j];
  }
  for (int a = 0; a < m; ++a) {
    auto gr = R0[a].gradient(theta);
    for (int j = 0; j < n; ++j) J(n + a, j) = gr[j];
    for (int b = 0; b < m; ++b) {
      auto gb = R1(a, b).gradient(theta);
      for (int j = 0; j < n; ++j) J(n + a, j) += gb[j] * r[b];
      J(n + a, n + b) = R1(a, b).evaluate(theta);
    }
  }
  return J;
}

CounterTerm CounterTerm::zero(int n, int m) {
  return {std::vector<double>(n, 0.0), std::vector<double>(m, 0.0), Eigen::MatrixXd::Zero(m, m)};
}

VectorFieldJet CounterTerm::field(int order) const {
  const int n = static_cast<int>(beta.size());
  const int m = static_cast<int>(b.size());
  VectorFieldJet f(n, m, order);
  for (int i = 0; i < n; ++i) f.tangent[i].constant_term().set_average(beta[i]);
  for (int a = 0; a < m; ++a) {
    f.normal[a].constant_term().set_average(b[a]);
    for (int c = 0; c < m; ++c) f.normal[a].linear(c).set_average(B(a, c));
  }
  return f;
}

double CounterTerm::norm() const {
  double d = 0.0;
  for (double x : beta) d = std::max(d, std::abs(x));
  for (double x : b) d = std::max(d, std::abs(x));
  if (B.size() > 0) d = std::max(d, B.cwiseAbs().maxCoeff());
  return d;
}

double CounterTerm::kernel_violation(const Eigen::MatrixXd& A) const {
  if (A.size() == 0) return 0.0;
  Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  double d = (A * bv).cwiseAbs().maxCoeff();
  return std::max(d, (A * B - B * A).cwiseAbs().maxCoeff());
}

CounterTerm& CounterTerm::operator+=(const CounterTerm& o) {
  for (std::size_t i = 0; i < beta.size(); ++i) beta[i] += o.beta[i];
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += o.b[i];
  B += o.B;
  return *this;
}

std::vector<FourierSeries> invert_torus_map(std::span<const FourierSeries> v) {
  const int n = static_cast<int>(v.size());
  if (n == 0) return {};
  int K = 0;
  for (const auto& vj : v) K = std::max(K, vj.order());
  Grid grid(n, K);
  return unsample_all(invert_on_grid(v, grid), n, grid.points, K);
}

Conjugacy invert_conjugacy(const Conjugacy& g) {
  const int K = g.order();
  Grid grid(g.n, K);
  auto w = invert_on_grid(g.phi_minus_id, grid);
  auto y = grid.shifted(w);
  auto c = sample_all_at(g.R0, y);
  GridMatrix M = checked_inverse(sample_matrix_at(g.R1, y), ErrorKind::SingularR1, "R1");
  Conjugacy h = Conjugacy::identity(g.n, g.m, K);
  h.phi_minus_id = unsample_all(w, g.n, grid.points, K);
  for (int a = 0; a < g.m; ++a) {
    Values r0 = Values::Zero(grid.count);
    for (int b = 0; b < g.m; ++b) {
      r0 -= M(a, b) * c[b];
      h.R1(a, b) = detail::unsample(M(a, b), g.n, grid.points, K);
    }
    h.R0[a] = detail::unsample(r0, g.n, grid.points, K);
  }
  return h;
}

Conjugacy compose(const Conjugacy& g2, const Conjugacy& g1) {
  if (g1.n != g2.n || g1.m != g2.m) fail(ErrorKind::DimensionMismatch, "compose: shapes differ");
  const int n = g1.n, m = g1.m;
  const int K = std::max(g1.order(), g2.order());
  Grid grid(n, K);
  auto v1 = sample_all(g1.phi_minus_id, grid.points);
  auto x = grid.shifted(v1);
  auto v2 = sample_all_at(g2.phi_minus_id, x);
  auto c2 = sample_all_at(g2.R0, x);
  GridMatrix M2 = sample_matrix_at(g2.R1, x);
  auto c1 = sample_all(g1.R0, grid.points);
  GridMatrix M1 = sample_matrix(g1.R1, grid.points);
  Conjugacy h = Conjugacy::identity(n, m, K);
  for (int i = 0; i < n; ++i) h.phi_minus_id[i] = detail::unsample(v1[i] + v2[i], n, grid.points, K);
  for (int a = 0; a < m; ++a) {
    Values r0 = c2[a];
    for (int b = 0; b < m; ++b) r0 += M2(a, b) * c1[b];
    h.R0[a] = detail::unsample(r0, n, grid.points, K);
    for (int b = 0; b < m; ++b) {
      Values e = Values::Zero(grid.count);
      for (int c = 0; c < m; ++c) e += M2(a, c) * M1(c, b);
      h.R1(a, b) = detail::unsample(e, n, grid.points, K);
    }
  }
  return h;
}

VectorFieldJet pull_back(const Conjugacy& g, const VectorFieldJet& w) {
  if (w.n != g.n || w.m != g.m) fail(ErrorKind::DimensionMismatch, "pull_back: field and map shapes differ");
  const int n = g.n, m = g.m;
  const int K = std::max(g.order(), field_order(w));
  Grid grid(n, K);
  auto x = grid.shifted(sample_all(g.phi_minus_id, grid.points));
  auto lin = affine_substitution(sample_all(g.R0, grid.points), sample_matrix(g.R1, grid.points));
  std::vector<GridJet> W;
  for (int i = 0; i < n + m; ++i) W.push_back(detail::substitute(detail::sample_at(w.component(i), x), lin));
  GridMatrix Jinv = checked_inverse(phi_jacobian(g, grid), ErrorKind::SingularR1, "phi'");
  GridMatrix R1inv = checked_inverse(sample_matrix(g.R1, grid.points), ErrorKind::SingularR1, "R1");
  std::vector<GridJet> out;
  for (int i = 0; i < n; ++i) {
    GridJet t(m, grid.count);
    for (int j = 0; j < n; ++j) t += Jinv(i, j) * W[j];
    out.push_back(std::move(t));
  }
  std::vector<GridJet> shifted;
  for (int b = 0; b < m; ++b) {
    GridJet t = W[n + b];
    for (int j = 0; j < n; ++j) {
      std::vector<Values> l;
      for (int c = 0; c < m; ++c) l.push_back(detail::sample(differentiate(g.R1(b, c), j), grid.points));
      GridJet L = GridJet::affine(m, detail::sample(differentiate(g.R0[b], j), grid.points), l);
      t -= detail::mul(L, out[j]);
    }
    shifted.push_back(std::move(t));
  }
  for (int a = 0; a < m; ++a) {
    GridJet t(m, grid.count);
    for (int b = 0; b < m; ++b) t += R1inv(a, b) * shifted[b];
    out.push_back(std::move(t));
  }
  return assemble(n, m, out, grid.points, K, w);
}

VectorFieldJet push_forward(const Conjugacy& g, const VectorFieldJet& u) {
  if (u.n != g.n || u.m != g.m) fail(ErrorKind::DimensionMismatch, "push_forward: field and map shapes differ");
  const int n = g.n, m = g.m;
  const int K = std::max(g.order(), field_order(u));
  Grid grid(n, K);
  std::vector<GridJet> U;
  for (int i = 0; i < n + m; ++i) U.push_back(detail::sample(u.component(i), grid.points));
  auto GU = apply_derivative(g, U, grid);
  std::vector<RJet> series;
  for (const auto& j : GU) series.push_back(detail::unsample(j, n, grid.points, K));
  auto w = invert_on_grid(g.phi_minus_id, grid);
  auto y = grid.shifted(w);
  auto c = sample_all_at(g.R0, y);
  GridMatrix M = checked_inverse(sample_matrix_at(g.R1, y), ErrorKind::SingularR1, "R1");
  std::vector<Values> offset;
  for (int a = 0; a < m; ++a) {
    Values o = Values::Zero(grid.count);
    for (int b = 0; b < m; ++b) o -= M(a, b) * c[b];
    offset.push_back(std::move(o));
  }
  auto lin = affine_substitution(offset, M);
  std::vector<GridJet> out;
  for (const auto& s : series) out.push_back(detail::substitute(detail::sample_at(s, y), lin));
  return assemble(n, m, out, grid.points, K, u);
}

VectorFieldJet lie_bracket(const VectorFieldJet& f, const VectorFieldJet& h) {
  if (f.n != h.n || f.m != h.m) fail(ErrorKind::DimensionMismatch, "lie_bracket: shapes differ");
  const int n = f.n, m = f.m;
  const int K = std::max(field_order(f), field_order(h));
  Grid grid(n, product_grid_points(K), true);
  std::vector<GridJet> F, H;
  for (int i = 0; i < n + m; ++i) {
    F.push_back(detail::sample(f.component(i), grid.points));
    H.push_back(detail::sample(h.component(i), grid.points));
  }
  // D x . y for jets x, y
  auto directional = [&](const VectorFieldJet& xs, const std::vector<GridJet>& X, const std::vector<GridJet>& Y) {
    std::vector<GridJet> out;
    for (int i = 0; i < n + m; ++i) {
      GridJet t(m, grid.count);
      for (int j = 0; j < n; ++j)
        t += detail::mul(detail::sample(xs.component(i).d_theta(j), grid.points), Y[j]);
      for (int a = 0; a < m; ++a) t += detail::mul(detail::d_r(X[i], a), Y[n + a]);
      out.push_back(std::move(t));
    }
    return out;
  };
  auto dh_f = directional(h, H, F);
  auto df_h = directional(f, F, H);
  std::vector<GridJet> out;
  for (int i = 0; i < n + m; ++i) out.push_back(dh_f[i] - df_h[i]);
  VectorFieldJet meta;
  return assemble(n, m, out, grid.points, K, meta);
}

VectorFieldJet hamiltonian_field(const RJet& H, double eta, std::span<const double> alpha) {
  const int n = H.dim();
  if (H.m() != n) fail(ErrorKind::DimensionMismatch, "hamiltonian_field needs m == n");
  VectorFieldJet u(n, n, H.order());
  for (int i = 0; i < n; ++i) {
    u.tangent[i] = H.d_r(i);
    u.normal[i] = H.d_theta(i) * -1.0;
    u.normal[i].linear(i).set_average(u.normal[i].linear(i).average() - eta);
  }
  u.alpha.assign(alpha.begin(), alpha.end());
  u.A = -eta * Eigen::MatrixXd::Identity(n, n);
  return u;
}

VectorFieldJet DissipativeHamiltonian::field() const {
  VectorFieldJet u = hamiltonian_field(H, eta);
  for (std::size_t a = 0; a < translation.size(); ++a) {
    auto& c = u.normal[a].constant_term();
    c.set_average(c.average() + translation[a]);
  }
  return u;
}

DissipativeHamiltonian push_forward_ham_dissipative(const Conjugacy& g, const RJet& H, double eta) {
  if (g.flavor == Flavor::general)
    fail(ErrorKind::ClassViolation, "push_forward_ham_dissipative needs a symplectic conjugacy");
  const int n = g.n;
  const int K = std::max(g.order(), H.order());
  Grid grid(n, K);
  auto w = invert_on_grid(g.phi_minus_id, grid);
  auto y = grid.shifted(w);
  auto c = sample_all_at(g.R0, y);
  GridMatrix M = checked_inverse(sample_matrix_at(g.R1, y), ErrorKind::SingularR1, "R1");
  std::vector<Values> offset;
  for (int a = 0; a < n; ++a) {
    Values o = Values::Zero(grid.count);
    for (int b = 0; b < n; ++b) o -= M(a, b) * c[b];
    offset.push_back(std::move(o));
  }
  GridJet Hg = detail::substitute(detail::sample_at(H, y), affine_substitution(offset, M));
  Values F = detail::sample_at(g.S, y);
  for (int j = 0; j < n; ++j) F += g.xi[j] * w[j];
  Hg.c[0] -= eta * F;
  DissipativeHamiltonian out;
  out.H = detail::unsample(Hg, n, grid.points, K);
  out.eta = eta;
  out.translation.resize(n);
  for (int j = 0; j < n; ++j) out.translation[j] = eta * g.xi[j];
  return out;
}

}  // namespace torusforge
