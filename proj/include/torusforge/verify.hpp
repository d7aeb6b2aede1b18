#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "torusforge/geometry.hpp"
#include "torusforge/jets.hpp"
#include "torusforge/spinorbit.hpp"

namespace torusforge {

struct Trajectory {
  std::vector<double> t;
  std::vector<double> theta;  // lifted angle
  std::vector<double> theta_dot;
  double dt = 0.0;
  int stride = 1;
};

// Fixed-step RK4 for theta'' + eta (theta' - nu) + eps d_theta f(theta, t) = 0 from (theta0, theta_dot0) at
// time t0 over a signed duration T; every `stride`-th step is stored.
Trajectory integrate_spin_orbit(const SpinOrbitProblem& p, double theta0, double theta_dot0, double T,
                                double dt = 1e-2, double t0 = 0.0, int stride = 1);

struct RotationEstimate {
  double value = 0.0;
  double error = 0.0;  // difference between the two halves of the window
};

// Mean angular velocity over the trailing window; the window must span at least 100 periods.
RotationEstimate rotation_number(const Trajectory& traj, double transient_fraction = 0.5);

// Point of the invariant torus: W(s) = (phi_1(s), alpha + R0_1(s)) in (theta, theta') coordinates.
struct TorusEmbedding {
  Conjugacy g;
  double alpha = 0.0;
  std::pair<double, double> at(double s1, double s2) const;
  // Distance from (theta, theta') at time t to the fibre of the torus over t (512-point polyline).
  double distance(double theta, double theta_dot, double t, int samples = 512) const;
};

struct FloquetEstimate {
  double exponent = 0.0;  // least-squares slope of log distance against signed time
  double initial_distance = 0.0;
  double final_distance = 0.0;
};

// Starts `offset` off the torus in theta' and integrates over T (default 6 / |eta|). direction 0 follows
// sign(eta), the attracting direction; +1 or -1 forces it. The slope is expected near -eta.
FloquetEstimate floquet_exponent(const SpinOrbitProblem& p, const TorusEmbedding& W, double offset = 1e-3,
                                 double T = 0.0, double dt = 1e-2, int direction = 0);

// Fixed-step RK4 for a general jet field on T^n x R^m; each state is (theta lifted, r).
struct FieldTrajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> x;
};
FieldTrajectory integrate_field(const VectorFieldJet& v, std::span<const double> x0, double T, double dt = 1e-2,
                                int stride = 1);

// max over random (theta, r), |r|_inf <= r_max, of |g'(x) u(x) - (v - lambda)(g(x))|_inf.
double conjugacy_residual(const Conjugacy& g, const VectorFieldJet& u, const CounterTerm& lambda,
                          const VectorFieldJet& v, int sample_count = 200, std::uint64_t seed = 1,
                          double r_max = 0.05);

// Columns t, theta mod 2 pi, theta lifted, theta'.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace torusforge
