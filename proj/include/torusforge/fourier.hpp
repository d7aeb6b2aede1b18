#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace torusforge {

using cplx = std::complex<double>;

// Canonical half-space of multi-indices {k : |k|_1 <= order, first nonzero k_j > 0} plus k = 0,
// ordered by |k|_1. Shared between all series of the same (dim, order).
class ModeSet {
 public:
  struct Slot {
    std::ptrdiff_t index = -1;  // -1: outside the truncation
    bool conjugate = false;     // k lies in the lower half-space; coefficient is conj(c[index])
  };

  static std::shared_ptr<const ModeSet> get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return l1_.size(); }
  std::span<const int> mode(std::size_t i) const {
    return {modes_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  int l1(std::size_t i) const { return l1_[i]; }
  Slot find(std::span<const int> k) const;

  ModeSet(int dim, int order);

 private:
  int dim_;
  int order_;
  std::vector<int> modes_;
  std::vector<int> l1_;
  std::vector<int> box_;  // (2K+1)^dim lookup: +(i+1) canonical, -(i+1) conjugate, 0 outside
};

// Real-valued truncated Fourier series on T^n = (R / 2pi Z)^n. Only the canonical half-space is
// stored; c(-k) = conj(c(k)) holds by construction.
class FourierSeries {
 public:
  FourierSeries() = default;
  FourierSeries(int dim, int order);

  static FourierSeries constant(int dim, int order, double value);
  // Entries (k, c_k); any half may be given, the conjugate mode is implied.
  static FourierSeries from_modes(int dim, int order,
                                  const std::vector<std::pair<std::vector<int>, cplx>>& entries);

  int dim() const { return modes_ ? modes_->dim() : 0; }
  int order() const { return modes_ ? modes_->order() : 0; }
  bool valid() const { return static_cast<bool>(modes_); }
  const ModeSet& modes() const { return *modes_; }
  std::shared_ptr<const ModeSet> mode_set() const { return modes_; }

  std::span<const cplx> coeffs() const { return c_; }
  std::span<cplx> coeffs() { return c_; }

  cplx coeff(std::span<const int> k) const;
  cplx coeff(std::initializer_list<int> k) const { return coeff(std::span<const int>(k.begin(), k.size())); }
  void set_coeff(std::span<const int> k, cplx value);
  void set_coeff(std::initializer_list<int> k, cplx value) {
    set_coeff(std::span<const int>(k.begin(), k.size()), value);
  }

  double average() const { return c_.empty() ? 0.0 : c_[0].real(); }
  void set_average(double value) { c_[0] = value; }
  bool is_constant() const;

  double weighted_norm(double s) const;
  double evaluate(std::span<const double> theta) const;
  std::vector<double> gradient(std::span<const double> theta) const;

  // Sum of |c_k| over |k|_1 > order/2 divided by the sum over the rest (0 when both vanish).
  double tail_ratio() const;

  FourierSeries with_order(int order) const;
  // Zero every coefficient below rel * (l1 norm).
  FourierSeries& prune(double rel = 1e-16);

  FourierSeries& operator+=(const FourierSeries& other);
  FourierSeries& operator-=(const FourierSeries& other);
  FourierSeries& operator*=(double a);
  FourierSeries operator-() const;
  friend FourierSeries operator+(FourierSeries a, const FourierSeries& b) { return a += b; }
  friend FourierSeries operator-(FourierSeries a, const FourierSeries& b) { return a -= b; }
  friend FourierSeries operator*(FourierSeries a, double s) { return a *= s; }
  friend FourierSeries operator*(double s, FourierSeries a) { return a *= s; }

 private:
  std::shared_ptr<const ModeSet> modes_;
  std::vector<cplx> c_;
};

double weighted_norm(const FourierSeries& f, double s);
double max_abs_coeff_diff(const FourierSeries& a, const FourierSeries& b);
// Average of the product f g over the torus, read off the coefficients.
double mean_product(const FourierSeries& f, const FourierSeries& g);
// l1 mass of the modes with |k|_1 > order/2 and of the remaining ones.
double tail_norm(const FourierSeries& f);
double head_norm(const FourierSeries& f);

// Dense matrix of series sharing (dim, order); row-major.
class SeriesMatrix {
 public:
  SeriesMatrix() = default;
  SeriesMatrix(int rows, int cols, int dim, int order)
      : rows_(rows), cols_(cols), e_(static_cast<std::size_t>(rows * cols), FourierSeries(dim, order)) {}
  static SeriesMatrix identity(int m, int dim, int order);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  FourierSeries& operator()(int i, int j) { return e_[static_cast<std::size_t>(i * cols_ + j)]; }
  const FourierSeries& operator()(int i, int j) const { return e_[static_cast<std::size_t>(i * cols_ + j)]; }
  std::vector<FourierSeries>& entries() { return e_; }
  const std::vector<FourierSeries>& entries() const { return e_; }

  // Max over rows of the sum of entry norms.
  double norm(double s = 0.0) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<FourierSeries> e_;
};

// Dealiased truncated product; the result has order max(order(f), order(g)).
FourierSeries multiply(const FourierSeries& f, const FourierSeries& g);
FourierSeries differentiate(const FourierSeries& f, int axis);
FourierSeries lie_derivative(const FourierSeries& f, std::span<const double> alpha);

// Coefficients of f o (id + v) from a 4x oversampled grid; v holds n displacement series.
FourierSeries compose_torus(const FourierSeries& f, std::span<const FourierSeries> v,
                            double divergence_tol = 1e-8);

// Grid transforms on the uniform grid theta_p = 2 pi p / points, row-major, last axis fastest.
int product_grid_points(int order);
int oversampled_grid_points(int order);
std::vector<double> grid_coordinates(int dim, int points);  // size points^dim * dim
std::vector<double> to_grid(const FourierSeries& f, int points);
FourierSeries from_grid(std::span<const double> values, int dim, int points, int order,
                        double* dropped_ratio = nullptr);
// Point values at arbitrary angles; `points` is flat with dim entries per point.
std::vector<double> evaluate_many(const FourierSeries& f, std::span<const double> points);

}  // namespace torusforge
