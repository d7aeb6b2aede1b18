#include "torusforge/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>

#include "torusforge/errors.hpp"

namespace torusforge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double x) {
  x = std::fmod(x, kTwoPi);
  if (x > std::numbers::pi) x -= kTwoPi;
  if (x < -std::numbers::pi) x += kTwoPi;
  return x;
}

double point_segment(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - ax - t * dx, py - ay - t * dy);
}

// Nonzero modes of a series on T^2 for pointwise evaluation of d_theta1 f.
struct SparseSeries {
  std::vector<std::array<int, 2>> k;
  std::vector<cplx> c;

  explicit SparseSeries(const FourierSeries& f) {
    for (std::size_t i = 1; i < f.modes().size(); ++i) {
      const cplx ci = f.coeffs()[i];
      if (ci == cplx{}) continue;
      const auto mode = f.modes().mode(i);
      k.push_back({mode[0], mode[1]});
      c.push_back(ci);
    }
  }

  // Stored half-space plus conjugates: d_1 f = -2 sum k_1 Im(c e^{i k.x}).
  double d1(double x1, double x2) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      const double ph = k[i][0] * x1 + k[i][1] * x2;
      acc -= 2.0 * k[i][0] * (c[i].real() * std::sin(ph) + c[i].imag() * std::cos(ph));
    }
    return acc;
  }
};

}  // namespace

Trajectory integrate_spin_orbit(const SpinOrbitProblem& p, double theta0, double theta_dot0, double T, double dt,
                                double t0, int stride) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const FourierSeries f = p.f();
  if (f.dim() != 2) fail(ErrorKind::DimensionMismatch, "spin-orbit potential must live on T^2");
  const SparseSeries df(f);
  const double h = T >= 0.0 ? dt : -dt;
  const auto steps = static_cast<long>(std::llround(std::abs(T) / dt));
  auto accel = [&](double th, double thd, double t) {
    return -p.eta * (thd - p.nu) - p.epsilon * df.d1(th, t);
  };
  Trajectory out;
  out.dt = dt;
  out.stride = std::max(1, stride);
  double th = theta0, v = theta_dot0, t = t0;
  auto store = [&] {
    out.t.push_back(t);
    out.theta.push_back(th);
    out.theta_dot.push_back(v);
  };
  store();
  for (long s = 1; s <= steps; ++s) {
    const double k1x = v, k1v = accel(th, v, t);
    const double k2x = v + 0.5 * h * k1v, k2v = accel(th + 0.5 * h * k1x, v + 0.5 * h * k1v, t + 0.5 * h);
    const double k3x = v + 0.5 * h * k2v, k3v = accel(th + 0.5 * h * k2x, v + 0.5 * h * k2v, t + 0.5 * h);
    const double k4x = v + h * k3v, k4v = accel(th + h * k3x, v + h * k3v, t + h);
    th += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    t = t0 + static_cast<double>(s) * h;
    if (!std::isfinite(th) || !std::isfinite(v) || std::abs(v) > 1e6)
      fail(ErrorKind::StepTooLarge, "integration blew up at t = " + sci(t));
    if (s % out.stride == 0 || s == steps) store();
  }
  return out;
}

RotationEstimate rotation_number(const Trajectory& traj, double transient_fraction) {
  if (traj.t.size() < 3) fail(ErrorKind::WindowTooShort, "trajectory has fewer than three samples");
  const double t_begin = traj.t.front(), t_end = traj.t.back();
  const double t_start = t_begin + transient_fraction * (t_end - t_begin);
  const auto first = static_cast<std::size_t>(
      std::lower_bound(traj.t.begin(), traj.t.end(), t_start,
                       [&](double a, double b) { return t_end >= t_begin ? a < b : a > b; }) -
      traj.t.begin());
  const std::size_t last = traj.t.size() - 1;
  const double window = std::abs(traj.t[last] - traj.t[first]);
  if (window < 100.0 * kTwoPi)
    fail(ErrorKind::WindowTooShort, "window " + sci(window) + " spans fewer than 100 periods");
  const std::size_t mid = first + (last - first) / 2;
  auto slope = [&](std::size_t a, std::size_t b) { return (traj.theta[b] - traj.theta[a]) / (traj.t[b] - traj.t[a]); };
  return {slope(first, last), std::abs(slope(first, mid) - slope(mid, last))};
}

std::pair<double, double> TorusEmbedding::at(double s1, double s2) const {
  const double s[2] = {s1, s2};
  return {s1 + g.phi_minus_id[0].evaluate(s), alpha + g.R0[0].evaluate(s)};
}

double TorusEmbedding::distance(double theta, double theta_dot, double t, int samples) const {
  // phi_2 = id, so the fibre over t is s2 = t.
  std::vector<std::pair<double, double>> poly(static_cast<std::size_t>(samples) + 1);
  for (int i = 0; i <= samples; ++i) poly[static_cast<std::size_t>(i)] = at(kTwoPi * i / samples, t);
  double best = HUGE_VAL;
  for (int i = 0; i < samples; ++i) {
    const auto& [ax, ay] = poly[static_cast<std::size_t>(i)];
    const auto& [bx, by] = poly[static_cast<std::size_t>(i + 1)];
    // Shift the query angle next to the segment start.
    const double px = ax + wrap(theta - ax);
    best = std::min(best, point_segment(px, theta_dot, ax, ay, bx, by));
  }
  return best;
}

FloquetEstimate floquet_exponent(const SpinOrbitProblem& p, const TorusEmbedding& W, double offset, double T,
                                 double dt, int direction) {
  if (p.eta == 0.0) throw std::invalid_argument("floquet_exponent needs eta != 0");
  const double sign = direction != 0 ? (direction > 0 ? 1.0 : -1.0) : (p.eta > 0.0 ? 1.0 : -1.0);
  const double duration = (T > 0.0 ? T : 6.0 / std::abs(p.eta)) * sign;
  const auto [th0, v0] = W.at(0.0, 0.0);
  const int stride = std::max(1, static_cast<int>(std::abs(duration) / dt / 60.0));
  Trajectory traj = integrate_spin_orbit(p, th0, v0 + offset, duration, dt, 0.0, stride);
  std::vector<double> ts, ls;
  FloquetEstimate out;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double d = W.distance(traj.theta[i], traj.theta_dot[i], traj.t[i]);
    if (d > 10.0 * offset)
      fail(ErrorKind::EscapedNeighborhood, "distance " + sci(d) + " left the tubular neighbourhood");
    if (i == 0) out.initial_distance = d;
    out.final_distance = d;
    ts.push_back(traj.t[i]);
    ls.push_back(std::log(d));
  }
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i] / n;
    ml += ls[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (ls[i] - ml);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  out.exponent = sxy / sxx;
  return out;
}

FieldTrajectory integrate_field(const VectorFieldJet& v, std::span<const double> x0, double T, double dt,
                                int stride) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const int n = v.n, dim = v.n + v.m;
  if (static_cast<int>(x0.size()) != dim) fail(ErrorKind::DimensionMismatch, "initial state size");
  const double h = T >= 0.0 ? dt : -dt;
  const auto steps = static_cast<long>(std::llround(std::abs(T) / dt));
  stride = std::max(1, stride);
  auto rhs = [&](const std::vector<double>& x) {
    return v.evaluate(std::span<const double>(x.data(), n), std::span<const double>(x.data() + n, v.m));
  };
  auto axpy = [&](const std::vector<double>& x, double a, const std::vector<double>& k) {
    std::vector<double> y(x);
    for (int i = 0; i < dim; ++i) y[i] += a * k[i];
    return y;
  };
  FieldTrajectory out;
  std::vector<double> x(x0.begin(), x0.end());
  out.t.push_back(0.0);
  out.x.push_back(x);
  for (long s = 1; s <= steps; ++s) {
    const auto k1 = rhs(x);
    const auto k2 = rhs(axpy(x, 0.5 * h, k1));
    const auto k3 = rhs(axpy(x, 0.5 * h, k2));
    const auto k4 = rhs(axpy(x, h, k3));
    for (int i = 0; i < dim; ++i) {
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(x[i]) || (i >= n && std::abs(x[i]) > 1e6)) fail(ErrorKind::StepTooLarge, "integration blew up");
    }
    if (s % stride == 0 || s == steps) {
      out.t.push_back(static_cast<double>(s) * h);
      out.x.push_back(x);
    }
  }
  return out;
}

double conjugacy_residual(const Conjugacy& g, const VectorFieldJet& u, const CounterTerm& lambda,
                          const VectorFieldJet& v, int sample_count, std::uint64_t seed, double r_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi), action(-r_max, r_max);
  const int n = g.n, m = g.m;
  const auto beta = lambda.beta;
  double worst = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    std::vector<double> th(n), r(m);
    for (auto& x : th) x = angle(rng);
    for (auto& x : r) x = action(rng);
    const auto gx = g.evaluate(th, r);
    const Eigen::MatrixXd J = g.jacobian(th, r);
    const auto ux = u.evaluate(th, r);
    const Eigen::VectorXd lhs = J * Eigen::Map<const Eigen::VectorXd>(ux.data(), n + m);
    std::vector<double> Th(gx.begin(), gx.begin() + n), R(gx.begin() + n, gx.end());
    auto vx = v.evaluate(Th, R);
    for (int i = 0; i < n; ++i) vx[i] -= beta[i];
    for (int a = 0; a < m; ++a) {
      vx[n + a] -= lambda.b[a];
      for (int b = 0; b < m; ++b) vx[n + a] -= lambda.B(a, b) * R[b];
    }
    for (int i = 0; i < n + m; ++i) worst = std::max(worst, std::abs(lhs(i) - vx[i]));
  }
  return worst;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,theta_mod_2pi,theta,theta_dot\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    double wrapped = std::fmod(traj.theta[i], kTwoPi);
    if (wrapped < 0.0) wrapped += kTwoPi;
    os << traj.t[i] << ',' << wrapped << ',' << traj.theta[i] << ',' << traj.theta_dot[i] << '\n';
  }
  os.precision(old);
}

}  // namespace torusforge
