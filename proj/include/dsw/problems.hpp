/**
 * @file problems.hpp
 * @brief Analytic reference problems with homogeneous Dirichlet data on (0,1)^d.
 */
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>

#include "dsw/fem.hpp"

namespace dsw {

/// Smooth bump 1_{|z - xi| < s} sin(pi (z - xi - s) / (2 s))^3, which is C^2 on the real line.
double mu(double xi, double s, double z);
double mu_prime(double xi, double s, double z);
double mu_second(double xi, double s, double z);

/// Scalar profile with first derivative, supported inside (0,1).
struct Profile {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// Exact homogeneous-Dirichlet solution on (0,1) of u_tt = u_xx with
/// u(x,0) = m(x) and u_t(x,0) = -m'(x): the pulse travels right and is
/// reflected with a sign change at each end, 2-periodic in t.
class ReflectedPulse {
public:
  explicit ReflectedPulse(Profile profile) : profile_(std::move(profile)) {}

  double u(double x, double t) const;
  double u_x(double x, double t) const;
  double u_t(double x, double t) const;

private:
  // rightward part: m on [0,1), zero on [1,2), 2-periodic
  double right(double z) const;
  double right_prime(double z) const;
  // leftward part: zero on [0,1), -m(2 - z) on [1,2), 2-periodic
  double left(double z) const;
  double left_prime(double z) const;

  Profile profile_;
};

struct ProblemSpec {
  std::string id;
  int dim = 1;
  double kappa = 1.0;
  SpaceFunction u0;
  SpaceFunction v0;
  SpaceTimeFunction forcing;  // empty when f == 0
  SpaceTimeFunction exact_u;
  SpaceTimeFunction exact_p;
  GradientFunction exact_grad_u;
  double final_time = 1.0;

  bool has_forcing() const { return static_cast<bool>(forcing); }
  bool has_exact() const { return static_cast<bool>(exact_u); }
};

/// u0 = mu_{0.55,0.2} - mu_{0.45,0.2}, v0 = -u0', f = 0, T = 5.
ProblemSpec problem_1d();

/// u = U(x,t) mu(y) + U(y,t) mu(x), mu = mu_{0.5,0.2}, U the reflected pulse
/// with initial profile mu; f = -U(x,t) mu''(y) - U(y,t) mu''(x); T = 1.
ProblemSpec problem_2d();

ProblemSpec problem_by_id(const std::string& id);

/// Largest |exact_u| over boundary samples at the given times.
double max_boundary_value(const ProblemSpec& problem, std::span<const double> times, int samples_per_edge = 101);

/// Initial state I_h u0, I_h v0, zeroed on Dirichlet nodes.
State initial_state(const SimplicialMesh& mesh, const ProblemSpec& problem);

}  // namespace dsw
