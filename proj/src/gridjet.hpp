#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "torusforge/fourier.hpp"
#include "torusforge/jets.hpp"

// Pointwise jet algebra on a uniform torus grid. Non-polynomial operations (matrix inverses,
// composition) are carried out here and transformed back once.
namespace torusforge::detail {

using Values = Eigen::ArrayXd;

inline std::size_t jet_quadratic_index(int a, int b, int m) {
  if (a > b) std::swap(a, b);
  return 1 + static_cast<std::size_t>(m) + static_cast<std::size_t>(a * m - a * (a - 1) / 2 + (b - a));
}

struct GridJet {
  int m = 0;
  std::vector<Values> c;

  GridJet() = default;
  GridJet(int m_, Eigen::Index count) : m(m_), c(RJet::monomial_count(m_), Values::Zero(count)) {}
  static GridJet constant(int m, const Values& v);
  // c0 + sum_b lin[b] r_b
  static GridJet affine(int m, const Values& c0, std::span<const Values> lin);

  Eigen::Index count() const { return c.front().size(); }
  Values& linear(int a) { return c[1 + a]; }
  const Values& linear(int a) const { return c[1 + a]; }
  Values& quadratic(int a, int b) { return c[jet_quadratic_index(a, b, m)]; }
  const Values& quadratic(int a, int b) const { return c[jet_quadratic_index(a, b, m)]; }

  GridJet& operator+=(const GridJet& o);
  GridJet& operator-=(const GridJet& o);
  GridJet& operator*=(const Values& f);
  friend GridJet operator+(GridJet a, const GridJet& b) { return a += b; }
  friend GridJet operator-(GridJet a, const GridJet& b) { return a -= b; }
  friend GridJet operator*(const Values& f, GridJet a) { return a *= f; }
};

GridJet mul(const GridJet& a, const GridJet& b);  // truncated at degree 2
GridJet d_r(const GridJet& j, int a);
// j(w_0, ..., w_{m-1}) with each w_a a jet in the new variables; truncated at degree 2.
GridJet substitute(const GridJet& j, std::span<const GridJet> w);

struct GridMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Values> e;

  GridMatrix() = default;
  GridMatrix(int r, int c, Eigen::Index count) : rows(r), cols(c), e(static_cast<std::size_t>(r * c), Values::Zero(count)) {}
  Values& operator()(int i, int j) { return e[static_cast<std::size_t>(i * cols + j)]; }
  const Values& operator()(int i, int j) const { return e[static_cast<std::size_t>(i * cols + j)]; }
};

// Pointwise inverse; min_singular receives the smallest singular value over the grid.
GridMatrix inverse(const GridMatrix& M, double* min_singular = nullptr);

Values sample(const FourierSeries& f, int points);
Values sample_at(const FourierSeries& f, std::span<const double> pts);
FourierSeries unsample(const Values& v, int dim, int points, int order);

GridJet sample(const RJet& j, int points);
GridJet sample_at(const RJet& j, std::span<const double> pts);
RJet unsample(const GridJet& g, int dim, int points, int order);

}  // namespace torusforge::detail
