#include "dsw/fem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "dsw/quadrature.hpp"

namespace dsw {

namespace {

struct CellGeometry {
  double measure = 0.0;
  // gradients of the barycentric coordinates, one per vertex
  std::array<Point, 3> grad{};
};

CellGeometry cell_geometry(const SimplicialMesh& mesh, std::size_t k) {
  auto c = mesh.cell(k);
  CellGeometry g;
  if (mesh.dim() == 1) {
    const double len = mesh.node(c[1])[0] - mesh.node(c[0])[0];
    if (!(std::abs(len) > 0.0)) throw AssemblyError("degenerate interval cell " + std::to_string(k));
    g.measure = std::abs(len);
    g.grad[0] = {-1.0 / len, 0.0};
    g.grad[1] = {1.0 / len, 0.0};
    return g;
  }
  const Point& a = mesh.node(c[0]);
  const Point& b = mesh.node(c[1]);
  const Point& d = mesh.node(c[2]);
  const double twice_area = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
  const double diam = mesh.cell_diameter(k);
  if (!(std::abs(twice_area) > 1e-14 * diam * diam))
    throw AssemblyError("degenerate triangle " + std::to_string(k));
  g.measure = 0.5 * std::abs(twice_area);
  const std::array<const Point*, 3> v{&a, &b, &d};
  for (int i = 0; i < 3; ++i) {
    const Point& p1 = *v[(i + 1) % 3];
    const Point& p2 = *v[(i + 2) % 3];
    g.grad[i] = {(p1[1] - p2[1]) / twice_area, (p2[0] - p1[0]) / twice_area};
  }
  return g;
}

}  // namespace

LocalNumbering LocalNumbering::whole(const SimplicialMesh& mesh) {
  std::vector<int> cells(mesh.num_cells());
  std::iota(cells.begin(), cells.end(), 0);
  return from_cells(mesh, std::move(cells));
}

LocalNumbering LocalNumbering::from_cells(const SimplicialMesh& mesh, std::vector<int> cells) {
  LocalNumbering region;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  region.cells = std::move(cells);
  std::vector<std::uint8_t> touched(mesh.num_nodes(), 0);
  for (int k : region.cells)
    for (int v : mesh.cell(k)) touched[v] = 1;
  region.global_to_local.assign(mesh.num_nodes(), -1);
  for (std::size_t j = 0; j < mesh.num_nodes(); ++j) {
    if (!touched[j]) continue;
    region.global_to_local[j] = static_cast<int>(region.nodes.size());
    region.nodes.push_back(static_cast<int>(j));
  }
  return region;
}

Vector assemble_lumped_mass(const SimplicialMesh& mesh, const LocalNumbering& region) {
  Vector mass(region.size(), 0.0);
  const double share = 1.0 / (mesh.dim() + 1);
  for (int k : region.cells) {
    const double m = cell_geometry(mesh, k).measure * share;
    for (int v : mesh.cell(k)) mass[region.global_to_local[v]] += m;
  }
  return mass;
}

Vector assemble_lumped_mass(const SimplicialMesh& mesh) {
  return assemble_lumped_mass(mesh, LocalNumbering::whole(mesh));
}

SparseMatrix assemble_stiffness(const SimplicialMesh& mesh, double kappa, const LocalNumbering& region) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  const int nv = mesh.nodes_per_cell();
  std::vector<Triplet> entries;
  entries.reserve(region.cells.size() * nv * nv);
  const double k2 = kappa * kappa;
  for (int k : region.cells) {
    const CellGeometry g = cell_geometry(mesh, k);
    auto c = mesh.cell(k);
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b < nv; ++b) {
        const double value =
            k2 * g.measure * (g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1]);
        entries.push_back({region.global_to_local[c[a]], region.global_to_local[c[b]], value});
      }
    }
  }
  return SparseMatrix::from_triplets(region.size(), entries);
}

SparseMatrix assemble_stiffness(const SimplicialMesh& mesh, double kappa) {
  return assemble_stiffness(mesh, kappa, LocalNumbering::whole(mesh));
}

DiscreteOperators assemble_operators(const SimplicialMesh& mesh, double kappa, const LocalNumbering& region) {
  DiscreteOperators ops;
  ops.lumped_mass = assemble_lumped_mass(mesh, region);
  ops.stiffness = assemble_stiffness(mesh, kappa, region);
  ops.dirichlet_mask.assign(region.size(), 0);
  ops.kappa = kappa;
  return ops;
}

DiscreteOperators assemble_operators(const SimplicialMesh& mesh, double kappa) {
  DiscreteOperators ops = assemble_operators(mesh, kappa, LocalNumbering::whole(mesh));
  ops.dirichlet_mask = mesh.boundary_flags();
  return ops;
}

Vector apply_Lh(const DiscreteOperators& ops, std::span<const double> q) {
  const std::size_t n = ops.size();
  if (q.size() != n) throw std::invalid_argument("apply_Lh: size mismatch");
  Vector masked(q.begin(), q.end());
  for (std::size_t j = 0; j < n; ++j)
    if (ops.dirichlet_mask[j]) masked[j] = 0.0;
  Vector out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if (!ops.dirichlet_mask[j]) out[j] = ops.stiffness.row_dot(j, masked) / ops.lumped_mass[j];
  return out;
}

double ml_inner(const DiscreteOperators& ops, std::span<const double> u, std::span<const double> v) {
  double sum = 0.0;
  for (std::size_t j = 0; j < ops.size(); ++j) sum += ops.lumped_mass[j] * u[j] * v[j];
  return sum;
}

double stiffness_form(const DiscreteOperators& ops, std::span<const double> u, std::span<const double> v) {
  double sum = 0.0;
  for (std::size_t j = 0; j < ops.size(); ++j) sum += u[j] * ops.stiffness.row_dot(j, v);
  return sum;
}

namespace {

/// Number of eigenvalues of the symmetric tridiagonal (alpha, beta) below x.
int sturm_count(const std::vector<double>& alpha, const std::vector<double>& beta, double x) {
  int count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double off = i == 0 ? 0.0 : beta[i - 1] * beta[i - 1];
    d = alpha[i] - x - (i == 0 ? 0.0 : off / d);
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++count;
  }
  return count;
}

double largest_tridiagonal_eigenvalue(const std::vector<double>& alpha, const std::vector<double>& beta) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double radius = (i > 0 ? std::abs(beta[i - 1]) : 0.0) + (i < beta.size() ? std::abs(beta[i]) : 0.0);
    lo = std::min(lo, alpha[i] - radius);
    hi = std::max(hi, alpha[i] + radius);
  }
  const int n = static_cast<int>(alpha.size());
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(std::abs(hi), 1e-300); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(alpha, beta, mid) == n) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace

double operator_norm_estimate(const DiscreteOperators& ops, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("operator_norm_estimate: tol must be positive");
  const std::size_t n = ops.size();
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < n; ++j)
    if (!ops.dirichlet_mask[j]) free.push_back(j);
  if (free.empty()) return 0.0;

  Vector inv_sqrt_mass(n, 0.0);
  for (std::size_t j : free) inv_sqrt_mass[j] = 1.0 / std::sqrt(ops.lumped_mass[j]);

  // S v = M^{-1/2} K M^{-1/2} v on the free nodes
  Vector scaled(n, 0.0);
  auto apply_symmetrized = [&](const Vector& v, Vector& out) {
    for (std::size_t j : free) scaled[j] = inv_sqrt_mass[j] * v[j];
    for (std::size_t j : free) out[j] = inv_sqrt_mass[j] * ops.stiffness.row_dot(j, scaled);
  };

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector v(n, 0.0), v_prev(n, 0.0), w(n, 0.0);
  for (std::size_t j : free) v[j] = unit(rng);
  const double start_norm = norm2(v);
  for (double& x : v) x /= start_norm;

  std::vector<double> alpha, beta;
  double estimate = 0.0;
  int settled = 0;
  // beyond the Krylov dimension the recurrence carries only round-off
  const int krylov_limit = static_cast<int>(free.size()) + 50;
  for (int it = 0; it < max_iter; ++it) {
    apply_symmetrized(v, w);
    const double a = dot(w, v);
    alpha.push_back(a);
    const double b_prev = beta.empty() ? 0.0 : beta.back();
    for (std::size_t j : free) w[j] -= a * v[j] + b_prev * v_prev[j];
    const double b = norm2(w);

    const double next = largest_tridiagonal_eigenvalue(alpha, beta);
    settled = (it > 0 && std::abs(next - estimate) <= tol * next) ? settled + 1 : 0;
    estimate = next;
    if (settled >= 3 || b <= 1e-14 * std::abs(estimate) || it + 1 >= krylov_limit) return estimate;

    beta.push_back(b);
    std::swap(v_prev, v);
    for (std::size_t j : free) v[j] = w[j] / b;
  }
  throw ConvergenceError("operator_norm_estimate: no convergence after " + std::to_string(max_iter) +
                             " iterations",
                         estimate);
}

Vector interpolate_nodal(const SimplicialMesh& mesh, const SpaceFunction& g) {
  Vector values(mesh.num_nodes());
  for (std::size_t j = 0; j < mesh.num_nodes(); ++j) values[j] = g(mesh.node(j));
  return values;
}

double energy_norm(const DiscreteOperators& ops, std::span<const double> q, std::span<const double> p) {
  return std::sqrt(stiffness_form(ops, q, q) + ml_inner(ops, p, p));
}

DiscreteNorms discrete_norms(const DiscreteOperators& ops, const State& state) {
  DiscreteNorms norms;
  const double vh2 = stiffness_form(ops, state.q, state.q);
  const double hh2 = ml_inner(ops, state.p, state.p);
  norms.vh = std::sqrt(std::max(vh2, 0.0));
  norms.hh = std::sqrt(hh2);
  norms.de = std::sqrt(std::max(vh2, 0.0) + hh2);
  return norms;
}

double b_norm(const DiscreteOperators& ops, std::span<const double> z, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("b_norm: lambda must be positive");
  const double value = ml_inner(ops, z, z) / (lambda * lambda) + stiffness_form(ops, z, z);
  return std::sqrt(std::max(value, 0.0));
}

int default_quad_order(int dim) { return dim == 1 ? 4 : 2; }

double error_vs_exact(const SimplicialMesh& mesh, const DiscreteOperators& ops, const State& state,
                      const GradientFunction& exact_grad_u, const SpaceTimeFunction& exact_p,
                      int quad_order) {
  if (quad_order < 1) throw std::invalid_argument("error_vs_exact: quad_order must be >= 1");
  const QuadratureRule rule = simplex_rule(mesh.dim(), quad_order);
  const double reference_measure = mesh.dim() == 1 ? 1.0 : 0.5;
  const double k2 = ops.kappa * ops.kappa;
  const double t = state.t;

  double total = 0.0;
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const CellGeometry g = cell_geometry(mesh, k);
    auto c = mesh.cell(k);
    const int nv = mesh.nodes_per_cell();
    Point grad_qh{0.0, 0.0};
    for (int a = 0; a < nv; ++a) {
      grad_qh[0] += state.q[c[a]] * g.grad[a][0];
      grad_qh[1] += state.q[c[a]] * g.grad[a][1];
    }
    const Point& x0 = mesh.node(c[0]);
    const Point& x1 = mesh.node(c[1]);
    const Point& x2 = mesh.node(c[nv - 1]);
    double cell_sum = 0.0;
    for (std::size_t i = 0; i < rule.points.size(); ++i) {
      const double s1 = rule.points[i][0];
      const double s2 = mesh.dim() == 2 ? rule.points[i][1] : 0.0;
      const std::array<double, 3> bary{1.0 - s1 - s2, s1, s2};
      Point x{x0[0] + s1 * (x1[0] - x0[0]), x0[1] + s1 * (x1[1] - x0[1])};
      if (mesh.dim() == 2) {
        x[0] += s2 * (x2[0] - x0[0]);
        x[1] += s2 * (x2[1] - x0[1]);
      }
      double ph = 0.0;
      for (int a = 0; a < nv; ++a) ph += bary[a] * state.p[c[a]];
      const Point gu = exact_grad_u(x, t);
      const double dx = grad_qh[0] - gu[0];
      const double dy = grad_qh[1] - gu[1];
      const double dp = ph - exact_p(x, t);
      cell_sum += rule.weights[i] * (k2 * (dx * dx + dy * dy) + dp * dp);
    }
    total += cell_sum * g.measure / reference_measure;
  }
  return std::sqrt(total);
}

}  // namespace dsw
