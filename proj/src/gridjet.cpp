#include "gridjet.hpp"

#include <algorithm>
#include <limits>

#include "torusforge/errors.hpp"

namespace torusforge::detail {

GridJet GridJet::constant(int m, const Values& v) {
  GridJet j(m, v.size());
  j.c[0] = v;
  return j;
}

GridJet GridJet::affine(int m, const Values& c0, std::span<const Values> lin) {
  GridJet j = constant(m, c0);
  for (int b = 0; b < m; ++b) j.c[1 + b] = lin[b];
  return j;
}

GridJet& GridJet::operator+=(const GridJet& o) {
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
  return *this;
}

GridJet& GridJet::operator-=(const GridJet& o) {
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
  return *this;
}

GridJet& GridJet::operator*=(const Values& f) {
  for (auto& v : c) v *= f;
  return *this;
}

GridJet mul(const GridJet& a, const GridJet& b) {
  const int m = a.m;
  GridJet out(m, a.count());
  out.c[0] = a.c[0] * b.c[0];
  for (int i = 0; i < m; ++i) out.c[1 + i] = a.c[0] * b.c[1 + i] + a.c[1 + i] * b.c[0];
  for (int i = 0; i < m; ++i)
    for (int k = i; k < m; ++k) {
      Values& q = out.quadratic(i, k);
      q = a.c[0] * b.quadratic(i, k) + a.quadratic(i, k) * b.c[0];
      q += a.c[1 + i] * b.c[1 + k];
      if (i != k) q += a.c[1 + k] * b.c[1 + i];
    }
  return out;
}

GridJet d_r(const GridJet& j, int a) {
  GridJet out(j.m, j.count());
  out.c[0] = j.c[1 + a];
  for (int b = 0; b < j.m; ++b) out.c[1 + b] = (a == b ? 2.0 : 1.0) * j.quadratic(a, b);
  return out;
}

GridJet substitute(const GridJet& j, std::span<const GridJet> w) {
  const int m2 = w.empty() ? 0 : w.front().m;
  GridJet out = GridJet::constant(m2, j.c[0]);
  for (int a = 0; a < j.m; ++a) out += j.c[1 + a] * w[a];
  for (int a = 0; a < j.m; ++a)
    for (int b = a; b < j.m; ++b) {
      const Values& q = j.quadratic(a, b);
      if ((q == 0.0).all()) continue;
      out += q * mul(w[a], w[b]);
    }
  return out;
}

GridMatrix inverse(const GridMatrix& M, double* min_singular) {
  if (M.rows != M.cols) fail(ErrorKind::DimensionMismatch, "inverse of a non-square grid matrix");
  const int m = M.rows;
  const Eigen::Index count = M.e.empty() ? 0 : M.e.front().size();
  GridMatrix out(m, m, count);
  double smin = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd a(m, m);
  for (Eigen::Index p = 0; p < count; ++p) {
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) a(i, k) = M(i, k)[p];
    if (min_singular) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
      smin = std::min(smin, svd.singularValues()(m - 1));
    }
    Eigen::MatrixXd inv = a.inverse();
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) out(i, k)[p] = inv(i, k);
  }
  if (min_singular) *min_singular = smin;
  return out;
}

Values sample(const FourierSeries& f, int points) {
  auto g = to_grid(f, points);
  return Eigen::Map<const Values>(g.data(), static_cast<Eigen::Index>(g.size()));
}

Values sample_at(const FourierSeries& f, std::span<const double> pts) {
  auto g = evaluate_many(f, pts);
  return Eigen::Map<const Values>(g.data(), static_cast<Eigen::Index>(g.size()));
}

FourierSeries unsample(const Values& v, int dim, int points, int order) {
  return from_grid(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), dim, points,
                   order);
}

GridJet sample(const RJet& j, int points) {
  GridJet out;
  out.m = j.m();
  for (std::size_t i = 0; i < j.size(); ++i) out.c.push_back(sample(j[i], points));
  return out;
}

GridJet sample_at(const RJet& j, std::span<const double> pts) {
  GridJet out;
  out.m = j.m();
  for (std::size_t i = 0; i < j.size(); ++i) out.c.push_back(sample_at(j[i], pts));
  return out;
}

RJet unsample(const GridJet& g, int dim, int points, int order) {
  RJet out(dim, order, g.m);
  for (std::size_t i = 0; i < g.c.size(); ++i) out[i] = unsample(g.c[i], dim, points, order);
  return out;
}

}  // namespace torusforge::detail
