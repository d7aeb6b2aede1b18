#include "torusforge/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "fft.hpp"
#include "torusforge/errors.hpp"

namespace torusforge {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool canonical(std::span<const int> k) {
  for (int kj : k) {
    if (kj > 0) return true;
    if (kj < 0) return false;
  }
  return true;  // k = 0
}

std::size_t ipow(int base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

void require_same_dim(const FourierSeries& a, const FourierSeries& b) {
  if (a.dim() != b.dim())
    fail(ErrorKind::DimensionMismatch,
         "series dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
}

// Grid index of multi-index k reduced mod points.
std::size_t wrap_index(std::span<const int> k, int points) {
  std::size_t idx = 0;
  for (int kj : k) {
    int r = kj % points;
    if (r < 0) r += points;
    idx = idx * static_cast<std::size_t>(points) + static_cast<std::size_t>(r);
  }
  return idx;
}

std::vector<cplx> spectrum(const FourierSeries& f, int points) {
  const auto& ms = f.modes();
  std::vector<cplx> data(ipow(points, f.dim()), cplx(0.0));
  std::vector<int> neg(f.dim());
  auto c = f.coeffs();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (c[i] == cplx(0.0)) continue;
    auto k = ms.mode(i);
    data[wrap_index(k, points)] += c[i];
    if (i == 0) continue;
    for (int j = 0; j < f.dim(); ++j) neg[j] = -k[j];
    data[wrap_index(neg, points)] += std::conj(c[i]);
  }
  return data;
}

}  // namespace

ModeSet::ModeSet(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1 || order < 0) throw std::invalid_argument("ModeSet: need dim >= 1 and order >= 0");
  const int side = 2 * order + 1;
  const std::size_t box = ipow(side, dim);
  struct Entry {
    int l1;
    std::vector<int> k;
  };
  std::vector<Entry> entries;
  std::vector<int> k(dim);
  for (std::size_t flat = 0; flat < box; ++flat) {
    std::size_t r = flat;
    int l1 = 0;
    for (int j = dim - 1; j >= 0; --j) {
      k[j] = static_cast<int>(r % side) - order;
      r /= side;
      l1 += std::abs(k[j]);
    }
    if (l1 <= order && canonical(k)) entries.push_back({l1, k});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.l1 < b.l1; });
  box_.assign(box, 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    modes_.insert(modes_.end(), entries[i].k.begin(), entries[i].k.end());
    l1_.push_back(entries[i].l1);
    std::size_t pos = 0, neg = 0;
    for (int j = 0; j < dim; ++j) {
      pos = pos * side + static_cast<std::size_t>(entries[i].k[j] + order);
      neg = neg * side + static_cast<std::size_t>(-entries[i].k[j] + order);
    }
    box_[pos] = static_cast<int>(i) + 1;
    if (i != 0) box_[neg] = -(static_cast<int>(i) + 1);
  }
}

std::shared_ptr<const ModeSet> ModeSet::get(int dim, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const ModeSet>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{dim, order}];
  if (!slot) slot = std::make_shared<const ModeSet>(dim, order);
  return slot;
}

ModeSet::Slot ModeSet::find(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim_) return {};
  const int side = 2 * order_ + 1;
  std::size_t pos = 0;
  int l1 = 0;
  for (int kj : k) {
    if (std::abs(kj) > order_) return {};
    l1 += std::abs(kj);
    pos = pos * side + static_cast<std::size_t>(kj + order_);
  }
  if (l1 > order_) return {};
  int v = box_[pos];
  if (v > 0) return {v - 1, false};
  if (v < 0) return {-v - 1, true};
  return {};
}

FourierSeries::FourierSeries(int dim, int order)
    : modes_(ModeSet::get(dim, order)), c_(modes_->size(), cplx(0.0)) {}

FourierSeries FourierSeries::constant(int dim, int order, double value) {
  FourierSeries f(dim, order);
  f.c_[0] = value;
  return f;
}

FourierSeries FourierSeries::from_modes(
    int dim, int order, const std::vector<std::pair<std::vector<int>, cplx>>& entries) {
  FourierSeries f(dim, order);
  for (const auto& [k, c] : entries) {
    auto slot = f.modes_->find(k);
    if (slot.index < 0) throw std::invalid_argument("from_modes: mode outside truncation");
    f.c_[slot.index] += slot.conjugate ? std::conj(c) : c;
  }
  f.c_[0] = f.c_[0].real();
  return f;
}

cplx FourierSeries::coeff(std::span<const int> k) const {
  auto slot = modes_->find(k);
  if (slot.index < 0) return 0.0;
  cplx c = c_[slot.index];
  return slot.conjugate ? std::conj(c) : c;
}

void FourierSeries::set_coeff(std::span<const int> k, cplx value) {
  auto slot = modes_->find(k);
  if (slot.index < 0) throw std::invalid_argument("set_coeff: mode outside truncation");
  if (slot.index == 0) value = value.real();
  c_[slot.index] = slot.conjugate ? std::conj(value) : value;
}

bool FourierSeries::is_constant() const {
  return std::all_of(c_.begin() + 1, c_.end(), [](cplx c) { return c == cplx(0.0); });
}

double FourierSeries::weighted_norm(double s) const {
  if (c_.empty()) return 0.0;
  double acc = std::abs(c_[0]);
  for (std::size_t i = 1; i < c_.size(); ++i) {
    if (c_[i] == cplx(0.0)) continue;
    acc += 2.0 * std::abs(c_[i]) * std::exp(s * modes_->l1(i));
  }
  return acc;
}

double FourierSeries::evaluate(std::span<const double> theta) const {
  double acc = c_[0].real();
  const int n = dim();
  for (std::size_t i = 1; i < c_.size(); ++i) {
    if (c_[i] == cplx(0.0)) continue;
    auto k = modes_->mode(i);
    double phase = 0.0;
    for (int j = 0; j < n; ++j) phase += k[j] * theta[j];
    acc += 2.0 * (c_[i].real() * std::cos(phase) - c_[i].imag() * std::sin(phase));
  }
  return acc;
}

std::vector<double> FourierSeries::gradient(std::span<const double> theta) const {
  const int n = dim();
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 1; i < c_.size(); ++i) {
    if (c_[i] == cplx(0.0)) continue;
    auto k = modes_->mode(i);
    double phase = 0.0;
    for (int j = 0; j < n; ++j) phase += k[j] * theta[j];
    // d/dtheta_j of 2 Re(c e^{i phase}) = -2 k_j Im(c e^{i phase})
    double im = c_[i].real() * std::sin(phase) + c_[i].imag() * std::cos(phase);
    for (int j = 0; j < n; ++j) g[j] -= 2.0 * k[j] * im;
  }
  return g;
}

double FourierSeries::tail_ratio() const {
  double head = 0.0, tail = 0.0;
  const int half = order() / 2;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    double a = (i == 0 ? 1.0 : 2.0) * std::abs(c_[i]);
    (modes_->l1(i) > half ? tail : head) += a;
  }
  if (tail == 0.0) return 0.0;
  return head == 0.0 ? HUGE_VAL : tail / head;
}

FourierSeries FourierSeries::with_order(int order) const {
  if (order == this->order()) return *this;
  FourierSeries out(dim(), order);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    if (modes_->l1(i) > order) break;
    out.c_[out.modes_->find(modes_->mode(i)).index] = c_[i];
  }
  return out;
}

FourierSeries& FourierSeries::prune(double rel) {
  double l1 = weighted_norm(0.0);
  double cut = rel * l1;
  for (auto& c : c_)
    if (std::abs(c) < cut) c = 0.0;
  return *this;
}

FourierSeries& FourierSeries::operator+=(const FourierSeries& other) {
  require_same_dim(*this, other);
  if (other.order() > order()) *this = with_order(other.order());
  if (other.order() == order()) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += other.c_[i];
  } else {
    for (std::size_t i = 0; i < other.c_.size(); ++i)
      c_[modes_->find(other.modes_->mode(i)).index] += other.c_[i];
  }
  return *this;
}

FourierSeries& FourierSeries::operator-=(const FourierSeries& other) { return *this += -other; }

FourierSeries& FourierSeries::operator*=(double a) {
  for (auto& c : c_) c *= a;
  return *this;
}

FourierSeries FourierSeries::operator-() const {
  FourierSeries out = *this;
  for (auto& c : out.c_) c = -c;
  return out;
}

double weighted_norm(const FourierSeries& f, double s) { return f.weighted_norm(s); }

double max_abs_coeff_diff(const FourierSeries& a, const FourierSeries& b) {
  FourierSeries d = a - b;
  double m = 0.0;
  for (cplx c : d.coeffs()) m = std::max(m, std::abs(c));
  return m;
}

double mean_product(const FourierSeries& f, const FourierSeries& g) {
  require_same_dim(f, g);
  const FourierSeries& lo = f.order() <= g.order() ? f : g;
  const FourierSeries& hi = f.order() <= g.order() ? g : f;
  auto a = lo.coeffs();
  double acc = a[0].real() * hi.coeffs()[0].real();
  const auto& ms = lo.modes();
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] == cplx(0.0)) continue;
    acc += 2.0 * (a[i] * std::conj(hi.coeff(ms.mode(i)))).real();
  }
  return acc;
}

namespace {

std::pair<double, double> head_tail(const FourierSeries& f) {
  double head = 0.0, tail = 0.0;
  const int half = f.order() / 2;
  auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    double a = (i == 0 ? 1.0 : 2.0) * std::abs(c[i]);
    (f.modes().l1(i) > half ? tail : head) += a;
  }
  return {head, tail};
}

}  // namespace

double tail_norm(const FourierSeries& f) { return head_tail(f).second; }
double head_norm(const FourierSeries& f) { return head_tail(f).first; }

SeriesMatrix SeriesMatrix::identity(int m, int dim, int order) {
  SeriesMatrix I(m, m, dim, order);
  for (int a = 0; a < m; ++a) I(a, a).set_average(1.0);
  return I;
}

double SeriesMatrix::norm(double s) const {
  double best = 0.0;
  for (int i = 0; i < rows_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < cols_; ++j) acc += (*this)(i, j).weighted_norm(s);
    best = std::max(best, acc);
  }
  return best;
}

int product_grid_points(int order) { return detail::good_size(std::max(3 * order + 1, 4)); }

int oversampled_grid_points(int order) { return detail::good_size(std::max(4 * order, 8)); }

std::vector<double> grid_coordinates(int dim, int points) {
  const std::size_t total = ipow(points, dim);
  std::vector<double> xs(total * dim);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t r = p;
    for (int j = dim - 1; j >= 0; --j) {
      xs[p * dim + j] = kTwoPi * static_cast<double>(r % points) / points;
      r /= points;
    }
  }
  return xs;
}

std::vector<double> to_grid(const FourierSeries& f, int points) {
  auto data = spectrum(f, points);
  detail::dft(data, f.dim(), points, false);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
  return out;
}

FourierSeries from_grid(std::span<const double> values, int dim, int points, int order,
                        double* dropped_ratio) {
  if (points < 2 * order + 1) throw std::invalid_argument("from_grid: grid too coarse for order");
  std::vector<cplx> data(values.begin(), values.end());
  if (data.size() != ipow(points, dim)) throw std::invalid_argument("from_grid: size mismatch");
  detail::dft(data, dim, points, true);
  const double scale = 1.0 / static_cast<double>(data.size());
  FourierSeries f(dim, order);
  auto c = f.coeffs();
  const auto& ms = f.modes();
  for (std::size_t i = 0; i < ms.size(); ++i) c[i] = data[wrap_index(ms.mode(i), points)] * scale;
  c[0] = c[0].real();
  if (dropped_ratio) {
    double total = 0.0;
    for (const auto& d : data) total += std::abs(d) * scale;
    double kept = f.weighted_norm(0.0);
    *dropped_ratio = total > 0.0 ? std::max(0.0, total - kept) / total : 0.0;
  }
  return f.prune();
}

std::vector<double> evaluate_many(const FourierSeries& f, std::span<const double> points) {
  const int n = f.dim();
  const int K = f.order();
  const std::size_t count = points.size() / static_cast<std::size_t>(n);
  const auto& ms = f.modes();
  auto c = f.coeffs();
  std::vector<std::size_t> active;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] != cplx(0.0)) active.push_back(i);
  std::vector<double> out(count, c[0].real());
  if (active.empty()) return out;
  // e[j][K + m] = exp(i m x_j) for -K <= m <= K
  std::vector<cplx> e(static_cast<std::size_t>(n) * (2 * K + 1));
  for (std::size_t p = 0; p < count; ++p) {
    for (int j = 0; j < n; ++j) {
      cplx* row = e.data() + static_cast<std::size_t>(j) * (2 * K + 1) + K;
      const cplx step = std::polar(1.0, points[p * n + j]);
      row[0] = 1.0;
      for (int m = 1; m <= K; ++m) {
        row[m] = row[m - 1] * step;
        row[-m] = std::conj(row[m]);
      }
    }
    double acc = 0.0;
    for (std::size_t i : active) {
      auto k = ms.mode(i);
      cplx z = c[i];
      for (int j = 0; j < n; ++j) z *= e[static_cast<std::size_t>(j) * (2 * K + 1) + K + k[j]];
      acc += z.real();
    }
    out[p] += 2.0 * acc;
  }
  return out;
}

FourierSeries multiply(const FourierSeries& f, const FourierSeries& g) {
  require_same_dim(f, g);
  const int order = std::max(f.order(), g.order());
  if (f.is_constant()) return (g * f.average()).with_order(order);
  if (g.is_constant()) return (f * g.average()).with_order(order);
  const int points = product_grid_points(order);
  auto a = to_grid(f, points);
  auto b = to_grid(g, points);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return from_grid(a, f.dim(), points, order);
}

FourierSeries differentiate(const FourierSeries& f, int axis) {
  if (axis < 0 || axis >= f.dim()) throw std::invalid_argument("differentiate: axis out of range");
  FourierSeries out = f;
  auto c = out.coeffs();
  const auto& ms = f.modes();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= cplx(0.0, ms.mode(i)[axis]);
  return out;
}

FourierSeries lie_derivative(const FourierSeries& f, std::span<const double> alpha) {
  if (static_cast<int>(alpha.size()) != f.dim())
    fail(ErrorKind::DimensionMismatch, "lie_derivative: frequency size");
  FourierSeries out = f;
  auto c = out.coeffs();
  const auto& ms = f.modes();
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto k = ms.mode(i);
    double ka = 0.0;
    for (int j = 0; j < f.dim(); ++j) ka += k[j] * alpha[j];
    c[i] *= cplx(0.0, ka);
  }
  return out;
}

FourierSeries compose_torus(const FourierSeries& f, std::span<const FourierSeries> v,
                            double divergence_tol) {
  const int n = f.dim();
  if (static_cast<int>(v.size()) != n) fail(ErrorKind::DimensionMismatch, "compose_torus: map size");
  bool identity = true;
  int order = f.order();
  for (const auto& vj : v) {
    require_same_dim(f, vj);
    order = std::max(order, vj.order());
    identity = identity && vj.weighted_norm(0.0) == 0.0;
  }
  if (identity || f.is_constant()) return f;
  const int points = oversampled_grid_points(order);
  auto xs = grid_coordinates(n, points);
  const std::size_t count = xs.size() / n;
  for (int j = 0; j < n; ++j) {
    auto vj = to_grid(v[j], points);
    for (std::size_t p = 0; p < count; ++p) xs[p * n + j] += vj[p];
  }
  auto values = evaluate_many(f, xs);
  double dropped = 0.0;
  FourierSeries out = from_grid(values, n, points, f.order(), &dropped);
  if (!std::isfinite(dropped) || dropped > divergence_tol)
    fail(ErrorKind::CompositionDivergence,
         "mass outside the retained band " + sci(dropped));
  return out;
}

}  // namespace torusforge
