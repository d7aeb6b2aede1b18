#include "torusforge/jets.hpp"

#include <algorithm>
#include <stdexcept>

#include "torusforge/errors.hpp"

namespace torusforge {

namespace {

void require_m(const RJet& a, const RJet& b) {
  if (a.m() != b.m() || a.dim() != b.dim())
    fail(ErrorKind::DimensionMismatch, "jet shapes differ");
}

// Marks a monomial product whose degree exceeds the truncation.
constexpr std::size_t npos = static_cast<std::size_t>(-1);

}  // namespace

RJet::RJet(int dim, int order, int m)
    : dim_(dim), order_(order), m_(m), c_(monomial_count(m), FourierSeries(dim, order)) {
  if (m < 0) throw std::invalid_argument("RJet: m must be nonnegative");
}

std::size_t RJet::quadratic_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  return 1 + static_cast<std::size_t>(m_) +
         static_cast<std::size_t>(a * m_ - a * (a - 1) / 2 + (b - a));
}

int RJet::degree() const {
  for (std::size_t i = c_.size(); i-- > 0;)
    if (c_[i].weighted_norm(0.0) > 0.0) return monomial_degree(i, m_);
  return 0;
}

double RJet::evaluate(std::span<const double> theta, std::span<const double> r) const {
  double acc = c_[0].evaluate(theta);
  for (int a = 0; a < m_; ++a) {
    const auto& ca = c_[linear_index(a)];
    if (ca.weighted_norm(0.0) > 0.0) acc += ca.evaluate(theta) * r[a];
  }
  for (int a = 0; a < m_; ++a)
    for (int b = a; b < m_; ++b) {
      const auto& cab = c_[quadratic_index(a, b)];
      if (cab.weighted_norm(0.0) > 0.0) acc += cab.evaluate(theta) * r[a] * r[b];
    }
  return acc;
}

double RJet::norm(double s) const {
  double acc = 0.0;
  for (const auto& c : c_) acc += c.weighted_norm(s);
  return acc;
}

RJet RJet::d_theta(int axis) const {
  RJet out = *this;
  for (auto& c : out.c_) c = differentiate(c, axis);
  return out;
}

RJet RJet::d_r(int a) const {
  RJet out(dim_, order_, m_);
  out.c_[0] = c_[linear_index(a)];
  for (int b = 0; b < m_; ++b) {
    FourierSeries q = c_[quadratic_index(a, b)];
    if (a == b) q *= 2.0;
    out.c_[linear_index(b)] = q;
  }
  return out;
}

RJet& RJet::operator+=(const RJet& o) {
  require_m(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

RJet& RJet::operator-=(const RJet& o) {
  require_m(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

RJet& RJet::operator*=(double a) {
  for (auto& c : c_) c *= a;
  return *this;
}

RJet jet_multiply(const RJet& a, const RJet& b, double* dropped) {
  require_m(a, b);
  const int m = a.m();
  RJet out(a.dim(), std::max(a.order(), b.order()), m);
  double lost = 0.0;
  auto product_index = [&](std::size_t i, std::size_t j) -> std::size_t {
    int di = RJet::monomial_degree(i, m), dj = RJet::monomial_degree(j, m);
    if (di + dj > RJet::kMaxDegree) return npos;
    if (di == 0) return j;
    if (dj == 0) return i;
    return out.quadratic_index(static_cast<int>(i) - 1, static_cast<int>(j) - 1);
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    double ni = a[i].weighted_norm(0.0);
    if (ni == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      double nj = b[j].weighted_norm(0.0);
      if (nj == 0.0) continue;
      std::size_t k = product_index(i, j);
      if (k == npos) {
        lost += ni * nj;
        continue;
      }
      out[k] += multiply(a[i], b[j]);
    }
  }
  if (dropped) *dropped = lost;
  return out;
}

RJet jet_scale(const RJet& a, const FourierSeries& f) {
  RJet out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (a[i].weighted_norm(0.0) > 0.0) out[i] = multiply(a[i], f);
  return out;
}

RJet jet_add(const RJet& a, const RJet& b) { return a + b; }

RJet jet_contract(const RJet& j, std::span<const RJet> w, double* dropped) {
  if (static_cast<int>(w.size()) != j.m()) fail(ErrorKind::DimensionMismatch, "jet_contract: m");
  const int m2 = w.empty() ? 0 : w.front().m();
  RJet out(j.dim(), j.order(), m2);
  out.constant_term() = j.constant_term();
  double lost = 0.0;
  for (int a = 0; a < j.m(); ++a)
    if (j.linear(a).weighted_norm(0.0) > 0.0) out += jet_scale(w[a], j.linear(a));
  for (int a = 0; a < j.m(); ++a)
    for (int b = a; b < j.m(); ++b) {
      const auto& q = j.quadratic(a, b);
      if (q.weighted_norm(0.0) == 0.0) continue;
      double d = 0.0;
      out += jet_scale(jet_multiply(w[a], w[b], &d), q);
      lost += d * q.weighted_norm(0.0);
    }
  if (dropped) *dropped = lost;
  return out;
}

FourierSeries jet_contract(const RJet& j, std::span<const double> w) {
  if (static_cast<int>(w.size()) != j.m()) fail(ErrorKind::DimensionMismatch, "jet_contract: m");
  FourierSeries out = j.constant_term();
  for (int a = 0; a < j.m(); ++a) out += j.linear(a) * w[a];
  for (int a = 0; a < j.m(); ++a)
    for (int b = a; b < j.m(); ++b) out += j.quadratic(a, b) * (w[a] * w[b]);
  return out;
}

VectorFieldJet::VectorFieldJet(int n_, int m_, int order)
    : n(n_), m(m_), tangent(n_, RJet(n_, order, m_)), normal(m_, RJet(n_, order, m_)) {}

VectorFieldJet VectorFieldJet::straight(std::span<const double> alpha, const Eigen::MatrixXd& A,
                                        int order) {
  const int n = static_cast<int>(alpha.size());
  const int m = static_cast<int>(A.rows());
  VectorFieldJet u(n, m, order);
  for (int i = 0; i < n; ++i) u.tangent[i].constant_term().set_average(alpha[i]);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) u.normal[a].linear(b).set_average(A(a, b));
  u.alpha.assign(alpha.begin(), alpha.end());
  u.A = A;
  return u;
}

double VectorFieldJet::norm(double s) const {
  double best = 0.0;
  for (const auto& c : tangent) best = std::max(best, c.norm(s));
  for (const auto& c : normal) best = std::max(best, c.norm(s));
  return best;
}

std::vector<double> VectorFieldJet::evaluate(std::span<const double> theta,
                                             std::span<const double> r) const {
  std::vector<double> out;
  out.reserve(n + m);
  for (const auto& c : tangent) out.push_back(c.evaluate(theta, r));
  for (const auto& c : normal) out.push_back(c.evaluate(theta, r));
  return out;
}

double VectorFieldJet::mixed_jet_norm(double s) const {
  double best = 0.0;
  for (const auto& c : tangent) best = std::max(best, c.constant_term().weighted_norm(s));
  for (const auto& c : normal) {
    double acc = c.constant_term().weighted_norm(s);
    for (int b = 0; b < m; ++b) acc += c.linear(b).weighted_norm(s);
    best = std::max(best, acc);
  }
  return best;
}

VectorFieldJet VectorFieldJet::without_mixed_jet() const {
  VectorFieldJet out = *this;
  const int order = this->order();
  for (auto& c : out.tangent) c.constant_term() = FourierSeries(n, order);
  for (auto& c : out.normal) {
    c.constant_term() = FourierSeries(n, order);
    for (int b = 0; b < m; ++b) c.linear(b) = FourierSeries(n, order);
  }
  return out;
}

VectorFieldJet& VectorFieldJet::operator+=(const VectorFieldJet& o) {
  if (o.n != n || o.m != m) fail(ErrorKind::DimensionMismatch, "vector field shapes differ");
  for (int i = 0; i < n; ++i) tangent[i] += o.tangent[i];
  for (int a = 0; a < m; ++a) normal[a] += o.normal[a];
  return *this;
}

VectorFieldJet& VectorFieldJet::operator-=(const VectorFieldJet& o) {
  if (o.n != n || o.m != m) fail(ErrorKind::DimensionMismatch, "vector field shapes differ");
  for (int i = 0; i < n; ++i) tangent[i] -= o.tangent[i];
  for (int a = 0; a < m; ++a) normal[a] -= o.normal[a];
  return *this;
}

VectorFieldJet& VectorFieldJet::operator*=(double s) {
  for (auto& c : tangent) c *= s;
  for (auto& c : normal) c *= s;
  return *this;
}

double tail_ratio(const VectorFieldJet& u) {
  double worst = 0.0;
  for (int i = 0; i < u.n + u.m; ++i) {
    const auto& c = u.component(i);
    for (std::size_t k = 0; k < c.size(); ++k) worst = std::max(worst, c[k].tail_ratio());
  }
  return worst;
}

}  // namespace torusforge
