#include "dsw/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsw {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap2(double z) { return z - 2.0 * std::floor(0.5 * z); }

}  // namespace

double mu(double xi, double s, double z) {
  if (!(std::abs(z - xi) < s)) return 0.0;
  const double v = std::sin((z - (xi + s)) / (2.0 * s) * kPi);
  return v * v * v;
}

double mu_prime(double xi, double s, double z) {
  if (!(std::abs(z - xi) < s)) return 0.0;
  const double arg = (z - (xi + s)) / (2.0 * s) * kPi;
  const double sn = std::sin(arg);
  return 3.0 * sn * sn * std::cos(arg) * kPi / (2.0 * s);
}

double mu_second(double xi, double s, double z) {
  if (!(std::abs(z - xi) < s)) return 0.0;
  const double arg = (z - (xi + s)) / (2.0 * s) * kPi;
  const double sn = std::sin(arg);
  const double cs = std::cos(arg);
  const double scale = kPi / (2.0 * s);
  return scale * scale * (6.0 * sn * cs * cs - 3.0 * sn * sn * sn);
}

double ReflectedPulse::right(double z) const {
  const double w = wrap2(z);
  return w < 1.0 ? profile_.value(w) : 0.0;
}

double ReflectedPulse::right_prime(double z) const {
  const double w = wrap2(z);
  return w < 1.0 ? profile_.derivative(w) : 0.0;
}

double ReflectedPulse::left(double z) const {
  const double w = wrap2(z);
  return w < 1.0 ? 0.0 : -profile_.value(2.0 - w);
}

double ReflectedPulse::left_prime(double z) const {
  const double w = wrap2(z);
  return w < 1.0 ? 0.0 : profile_.derivative(2.0 - w);
}

double ReflectedPulse::u(double x, double t) const { return right(x - t) + left(x + t); }
double ReflectedPulse::u_x(double x, double t) const { return right_prime(x - t) + left_prime(x + t); }
double ReflectedPulse::u_t(double x, double t) const { return -right_prime(x - t) + left_prime(x + t); }

ProblemSpec problem_1d() {
  constexpr double s = 0.2;
  Profile bump{[](double z) { return mu(0.55, s, z) - mu(0.45, s, z); },
               [](double z) { return mu_prime(0.55, s, z) - mu_prime(0.45, s, z); }};
  auto pulse = std::make_shared<ReflectedPulse>(bump);

  ProblemSpec spec;
  spec.id = "1d";
  spec.dim = 1;
  spec.kappa = 1.0;
  spec.final_time = 5.0;
  spec.u0 = [bump](const Point& x) { return bump.value(x[0]); };
  spec.v0 = [bump](const Point& x) { return -bump.derivative(x[0]); };
  spec.exact_u = [pulse](const Point& x, double t) { return pulse->u(x[0], t); };
  spec.exact_p = [pulse](const Point& x, double t) { return pulse->u_t(x[0], t); };
  spec.exact_grad_u = [pulse](const Point& x, double t) { return Point{pulse->u_x(x[0], t), 0.0}; };
  return spec;
}

ProblemSpec problem_2d() {
  constexpr double xi = 0.5;
  constexpr double s = 0.2;
  Profile bump{[](double z) { return mu(xi, s, z); }, [](double z) { return mu_prime(xi, s, z); }};
  auto pulse = std::make_shared<ReflectedPulse>(bump);

  ProblemSpec spec;
  spec.id = "2d";
  spec.dim = 2;
  spec.kappa = 1.0;
  spec.final_time = 1.0;
  spec.exact_u = [pulse](const Point& x, double t) {
    return pulse->u(x[0], t) * mu(xi, s, x[1]) + pulse->u(x[1], t) * mu(xi, s, x[0]);
  };
  spec.exact_p = [pulse](const Point& x, double t) {
    return pulse->u_t(x[0], t) * mu(xi, s, x[1]) + pulse->u_t(x[1], t) * mu(xi, s, x[0]);
  };
  spec.exact_grad_u = [pulse](const Point& x, double t) {
    return Point{pulse->u_x(x[0], t) * mu(xi, s, x[1]) + pulse->u(x[1], t) * mu_prime(xi, s, x[0]),
                 pulse->u(x[0], t) * mu_prime(xi, s, x[1]) + pulse->u_x(x[1], t) * mu(xi, s, x[0])};
  };
  // U solves the 1D wave equation, so the mixed terms cancel.
  spec.forcing = [pulse](const Point& x, double t) {
    return -pulse->u(x[0], t) * mu_second(xi, s, x[1]) - pulse->u(x[1], t) * mu_second(xi, s, x[0]);
  };
  auto exact_u = spec.exact_u;
  auto exact_p = spec.exact_p;
  spec.u0 = [exact_u](const Point& x) { return exact_u(x, 0.0); };
  spec.v0 = [exact_p](const Point& x) { return exact_p(x, 0.0); };
  return spec;
}

ProblemSpec problem_by_id(const std::string& id) {
  if (id == "1d") return problem_1d();
  if (id == "2d") return problem_2d();
  throw std::invalid_argument("unknown problem '" + id + "' (expected 1d or 2d)");
}

double max_boundary_value(const ProblemSpec& problem, std::span<const double> times, int samples_per_edge) {
  double worst = 0.0;
  for (double t : times) {
    if (problem.dim == 1) {
      worst = std::max({worst, std::abs(problem.exact_u({0.0, 0.0}, t)), std::abs(problem.exact_u({1.0, 0.0}, t))});
      continue;
    }
    for (int i = 0; i < samples_per_edge; ++i) {
      const double r = static_cast<double>(i) / (samples_per_edge - 1);
      for (const Point& x : {Point{r, 0.0}, Point{r, 1.0}, Point{0.0, r}, Point{1.0, r}})
        worst = std::max(worst, std::abs(problem.exact_u(x, t)));
    }
  }
  return worst;
}

State initial_state(const SimplicialMesh& mesh, const ProblemSpec& problem) {
  State state(interpolate_nodal(mesh, problem.u0), interpolate_nodal(mesh, problem.v0), 0.0);
  for (std::size_t j = 0; j < mesh.num_nodes(); ++j) {
    if (mesh.on_boundary(j)) {
      state.q[j] = 0.0;
      state.p[j] = 0.0;
    }
  }
  return state;
}

}  // namespace dsw
