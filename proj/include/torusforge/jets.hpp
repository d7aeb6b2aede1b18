#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "torusforge/fourier.hpp"

namespace torusforge {

// Polynomial of degree <= 2 in r in R^m with FourierSeries coefficients on T^n.
// Monomial layout: [1, r_0..r_{m-1}, r_a r_b for a <= b in row order].
class RJet {
 public:
  static constexpr int kMaxDegree = 2;

  RJet() = default;
  RJet(int dim, int order, int m);

  static std::size_t monomial_count(int m) { return 1 + m + m * (m + 1) / 2; }
  static std::size_t linear_index(int a) { return 1 + static_cast<std::size_t>(a); }
  std::size_t quadratic_index(int a, int b) const;
  static int monomial_degree(std::size_t idx, int m) { return idx == 0 ? 0 : (idx <= static_cast<std::size_t>(m) ? 1 : 2); }

  int dim() const { return dim_; }
  int order() const { return order_; }
  int m() const { return m_; }
  std::size_t size() const { return c_.size(); }

  FourierSeries& operator[](std::size_t idx) { return c_[idx]; }
  const FourierSeries& operator[](std::size_t idx) const { return c_[idx]; }
  FourierSeries& constant_term() { return c_[0]; }
  const FourierSeries& constant_term() const { return c_[0]; }
  FourierSeries& linear(int a) { return c_[linear_index(a)]; }
  const FourierSeries& linear(int a) const { return c_[linear_index(a)]; }
  FourierSeries& quadratic(int a, int b) { return c_[quadratic_index(a, b)]; }
  const FourierSeries& quadratic(int a, int b) const { return c_[quadratic_index(a, b)]; }

  int degree() const;  // highest degree with a nonzero coefficient (0 for the zero jet)
  double evaluate(std::span<const double> theta, std::span<const double> r) const;
  // Sum of weighted norms of all coefficients.
  double norm(double s) const;

  RJet d_theta(int axis) const;
  RJet d_r(int a) const;

  RJet& operator+=(const RJet& o);
  RJet& operator-=(const RJet& o);
  RJet& operator*=(double a);
  friend RJet operator+(RJet a, const RJet& b) { return a += b; }
  friend RJet operator-(RJet a, const RJet& b) { return a -= b; }
  friend RJet operator*(RJet a, double s) { return a *= s; }
  friend RJet operator*(double s, RJet a) { return a *= s; }

 private:
  int dim_ = 0;
  int order_ = 0;
  int m_ = 0;
  std::vector<FourierSeries> c_;
};

// Product truncated at degree 2; `dropped` receives the norm of the discarded degree 3-4 part.
RJet jet_multiply(const RJet& a, const RJet& b, double* dropped = nullptr);
RJet jet_scale(const RJet& a, const FourierSeries& f);
RJet jet_add(const RJet& a, const RJet& b);
// Substitution r := w (w has m entries, each an RJet in the same variables), truncated at degree 2.
RJet jet_contract(const RJet& j, std::span<const RJet> w, double* dropped = nullptr);
// Substitution r := w for constant w (evaluates the r-polynomial).
FourierSeries jet_contract(const RJet& j, std::span<const double> w);

// n tangent and m normal components; alpha and A describe the class U(alpha, A) when set.
struct VectorFieldJet {
  int n = 0;
  int m = 0;
  std::vector<RJet> tangent;
  std::vector<RJet> normal;
  std::vector<double> alpha;
  Eigen::MatrixXd A;

  VectorFieldJet() = default;
  VectorFieldJet(int n, int m, int order);
  static VectorFieldJet straight(std::span<const double> alpha, const Eigen::MatrixXd& A, int order);

  int order() const { return tangent.empty() ? normal.front().order() : tangent.front().order(); }
  RJet& component(int i) { return i < n ? tangent[i] : normal[i - n]; }
  const RJet& component(int i) const { return i < n ? tangent[i] : normal[i - n]; }

  // max over components of the jet norm
  double norm(double s = 0.0) const;
  std::vector<double> evaluate(std::span<const double> theta, std::span<const double> r) const;

  // u1: tangent linear coefficients (n x m); U0/U1: normal order-0 and order-1 parts.
  FourierSeries tangent0(int i) const { return tangent[i].constant_term(); }
  FourierSeries normal0(int a) const { return normal[a].constant_term(); }
  FourierSeries normal1(int a, int b) const { return normal[a].linear(b); }
  FourierSeries u1(int i, int b) const { return tangent[i].linear(b); }

  // Norm of the mixed jet j^{0,1}: tangent order 0 and normal orders 0 and 1.
  double mixed_jet_norm(double s = 0.0) const;
  // Zero-out the mixed jet j^{0,1}.
  VectorFieldJet without_mixed_jet() const;

  VectorFieldJet& operator+=(const VectorFieldJet& o);
  VectorFieldJet& operator-=(const VectorFieldJet& o);
  VectorFieldJet& operator*=(double a);
  friend VectorFieldJet operator+(VectorFieldJet a, const VectorFieldJet& b) { return a += b; }
  friend VectorFieldJet operator-(VectorFieldJet a, const VectorFieldJet& b) { return a -= b; }
  friend VectorFieldJet operator*(double s, VectorFieldJet a) { return a *= s; }
};

double tail_ratio(const VectorFieldJet& u);

}  // namespace torusforge
