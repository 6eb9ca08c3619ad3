/**
 * @file fem.hpp
 * @brief Mass-lumped P1 finite elements: assembly, the discrete operator
 * L_h = M^{-1} K on the zero-trace space, discrete norms and errors.
 */
#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dsw/mesh.hpp"
#include "dsw/sparse.hpp"

namespace dsw {

using SpaceFunction = std::function<double(const Point&)>;
using SpaceTimeFunction = std::function<double(const Point&, double)>;
using GradientFunction = std::function<Point(const Point&, double)>;

class AssemblyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cells of a cell-aligned region together with a compact numbering of the
/// nodes they touch. Local node ids follow ascending global ids.
struct LocalNumbering {
  std::vector<int> cells;            // ascending
  std::vector<int> nodes;            // local -> global
  std::vector<int> global_to_local;  // -1 for nodes outside the region

  std::size_t size() const { return nodes.size(); }
  static LocalNumbering whole(const SimplicialMesh& mesh);
  static LocalNumbering from_cells(const SimplicialMesh& mesh, std::vector<int> cells);
};

struct DiscreteOperators {
  Vector lumped_mass;
  SparseMatrix stiffness;
  std::vector<std::uint8_t> dirichlet_mask;
  double kappa = 1.0;

  std::size_t size() const { return lumped_mass.size(); }
};

/// Paired nodal vectors (q, p) approximating (u, du/dt) at time t.
struct State {
  Vector q;
  Vector p;
  double t = 0.0;

  State() = default;
  explicit State(std::size_t n, double time = 0.0) : q(n, 0.0), p(n, 0.0), t(time) {}
  State(Vector q_, Vector p_, double time) : q(std::move(q_)), p(std::move(p_)), t(time) {}
};

Vector assemble_lumped_mass(const SimplicialMesh& mesh);
Vector assemble_lumped_mass(const SimplicialMesh& mesh, const LocalNumbering& region);

SparseMatrix assemble_stiffness(const SimplicialMesh& mesh, double kappa);
SparseMatrix assemble_stiffness(const SimplicialMesh& mesh, double kappa, const LocalNumbering& region);

/// Global operators with the Dirichlet mask set on the mesh boundary.
DiscreteOperators assemble_operators(const SimplicialMesh& mesh, double kappa);

/// Operators restricted to a region. No node is masked.
DiscreteOperators assemble_operators(const SimplicialMesh& mesh, double kappa, const LocalNumbering& region);

/// L_h q; q is treated as zero on masked nodes and the result vanishes there.
Vector apply_Lh(const DiscreteOperators& ops, std::span<const double> q);

/// Mass-lumped inner product (u, v)_ML.
double ml_inner(const DiscreteOperators& ops, std::span<const double> u, std::span<const double> v);

/// Stiffness form a(u, v) = u^T K v.
double stiffness_form(const DiscreteOperators& ops, std::span<const double> u, std::span<const double> v);

class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate_(last_estimate) {}
  double last_estimate() const { return last_estimate_; }

private:
  double last_estimate_;
};

/// Largest eigenvalue of L_h, i.e. ||L_h|| in the mass-lumped norm.
/// Krylov (Lanczos) iteration on M^{-1/2} K M^{-1/2} over the unmasked nodes.
double operator_norm_estimate(const DiscreteOperators& ops, double tol = 1e-8, int max_iter = 10000);

Vector interpolate_nodal(const SimplicialMesh& mesh, const SpaceFunction& g);

struct DiscreteNorms {
  double vh = 0.0;  // sqrt(q^T K q)
  double hh = 0.0;  // sqrt(p^T M p)
  double de = 0.0;  // sqrt(vh^2 + hh^2)
};

DiscreteNorms discrete_norms(const DiscreteOperators& ops, const State& state);
double energy_norm(const DiscreteOperators& ops, std::span<const double> q, std::span<const double> p);

/// (lambda^-2 z^T M z + z^T K z)^{1/2} with the operators of a (sub)region.
double b_norm(const DiscreteOperators& ops, std::span<const double> z, double lambda);

/// (int kappa^2 |grad q_h - grad u|^2 + int |p_h - p|^2)^{1/2} at time state.t,
/// with q_h, p_h the P1 interpolants of the nodal values. quad_order is the
/// polynomial degree integrated exactly per cell.
double error_vs_exact(const SimplicialMesh& mesh, const DiscreteOperators& ops, const State& state,
                      const GradientFunction& exact_grad_u, const SpaceTimeFunction& exact_p,
                      int quad_order);

/// Default quadrature degree for error_vs_exact: 4 in 1D, 2 on triangles.
int default_quad_order(int dim);

}  // namespace dsw
