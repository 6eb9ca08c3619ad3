/**
 * @file integrators.hpp
 * @brief Leapfrog, Crank-Nicolson and domain-splitting time steppers for
 *
 *     d/dt (q, p) = (p, -L_h q + f_h),
 *
 * with nodal vectors over all mesh nodes, zero on Dirichlet nodes.
 *
 * One domain-splitting step from x^{n-1}:
 *   1. predict q on every artificial interface with one leapfrog step;
 *   2. on each overlapping subdomain, take a Crank-Nicolson step with the
 *      predicted values as Dirichlet data;
 *   3. assemble the global state by nodal averaging.
 */
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsw/decomposition.hpp"
#include "dsw/fem.hpp"
#include "dsw/parallel.hpp"
#include "dsw/sparse.hpp"

namespace dsw {

/// Step size plus the nodal forcing f_h^n = I_h f(t_n). The averaged forcing
/// fbar = (f_h^n + f_h^{n-1}) / 2 is cached per step.
class StepContext {
public:
  StepContext(const SimplicialMesh& mesh, double tau, SpaceTimeFunction forcing = {});

  double tau() const { return tau_; }
  bool has_forcing() const { return static_cast<bool>(forcing_); }
  const SimplicialMesh& mesh() const { return *mesh_; }

  /// fbar for the step starting at t_prev (zero vector without forcing).
  const Vector& forcing_mean(double t_prev);
  /// Same value at one node, evaluated directly.
  double forcing_mean_at(std::size_t node, double t_prev) const;

private:
  const SimplicialMesh* mesh_;
  double tau_;
  SpaceTimeFunction forcing_;
  std::optional<double> cached_t_;
  Vector cached_mean_;
  std::optional<double> last_t_;
  Vector last_values_;
};

/// Leapfrog q-update at a single unmasked node; shared by the global step and
/// the interface prediction so both produce identical bits.
double leapfrog_q_at(const DiscreteOperators& ops, std::size_t node, std::span<const double> q,
                     std::span<const double> p, double tau, double fbar);

State leapfrog_step(const DiscreteOperators& ops, StepContext& ctx, const State& state);

/// Crank-Nicolson system on a set of nodes: (M + tau^2/4 K) restricted to the
/// region, with identity rows on the fixed (Dirichlet) nodes.
struct SubdomainSystem {
  int id = -1;
  std::vector<int> nodes;               // local -> global
  std::vector<std::uint8_t> fixed;      // Dirichlet rows (interface or physical boundary)
  std::vector<std::uint8_t> interface;  // subset of fixed taking predicted data
  Vector mass;                          // lumped mass per local node
  SparseMatrix stiffness;               // rows of K for local nodes, local columns
  SparseMatrix full;                    // M + tau^2/4 K on free rows (lifting)
  SparseMatrix system;                  // full with identity rows/cols on fixed nodes
  double tau = 0.0;

  std::size_t size() const { return nodes.size(); }
};

/// Global Crank-Nicolson system (all nodes, Dirichlet on the mesh boundary).
SubdomainSystem prepare_global_system(const DiscreteOperators& ops, double tau);

/// System on the overlapping subdomain i; Dirichlet on its artificial
/// interface and on the physical boundary.
SubdomainSystem prepare_subdomain_system(const DiscreteOperators& ops, const Decomposition& decomposition,
                                         int i, double tau);

/// One Crank-Nicolson step on a system. `fbar` is global-indexed (or empty for
/// f = 0); `boundary_q` holds the new q on interface nodes (local indexing,
/// other entries ignored). Solves for the increment q^n - q^{n-1} and sets
/// p^n = 2 (q^n - q^{n-1}) / tau - p^{n-1} at every node.
State subdomain_cn_step(const SubdomainSystem& system, std::span<const double> fbar, const State& local,
                        std::span<const double> boundary_q, const SolverConfig& solver);

State cn_step(const DiscreteOperators& ops, StepContext& ctx, const State& state, const SolverConfig& solver = {});

enum class OneStepForm { CrankNicolson, Leapfrog };

/// (R_-)^{-1} (R_+ x + tau (0, fbar)) for the CN or leapfrog operator pair.
/// Independent of cn_step/leapfrog_step: solves the block system by
/// eliminating the p-component.
State apply_one_step_operator(const DiscreteOperators& ops, StepContext& ctx, const State& state, OneStepForm form,
                              const SolverConfig& solver = {});

enum class PredictionMode { Local, Global };

/// Leapfrog prediction of q^n at every artificial-interface node. Returns a
/// global-indexed vector, meaningful only on interface nodes (zero elsewhere).
Vector predict_interface_values(const DiscreteOperators& ops, StepContext& ctx, const Decomposition& decomposition,
                                const State& state, PredictionMode mode = PredictionMode::Local);

/// Domain-splitting stepper holding the subdomain systems for a fixed tau.
class DomainSplitting {
public:
  DomainSplitting(const DiscreteOperators& ops, const Decomposition& decomposition, double tau,
                  SolverConfig solver = {}, int threads = 1);

  State step(StepContext& ctx, const State& state);

  const Decomposition& decomposition() const { return *decomposition_; }
  /// Empty until the first step.
  const AveragingPlan& plan() const { return plan_; }
  const std::vector<SubdomainSystem>& systems() const { return systems_; }
  void set_prediction_mode(PredictionMode mode) { prediction_mode_ = mode; }

private:
  const DiscreteOperators* ops_;
  const Decomposition* decomposition_;
  AveragingPlan plan_;
  std::vector<SubdomainSystem> systems_;
  SolverConfig solver_;
  std::unique_ptr<WorkerPool> pool_;
  PredictionMode prediction_mode_ = PredictionMode::Local;
};

State ds_step(const DiscreteOperators& ops, StepContext& ctx, const Decomposition& decomposition,
              const State& state, const SolverConfig& solver = {});

enum class Scheme { Leapfrog, CrankNicolson, DomainSplitting };

const char* scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct IntegratorConfig {
  Scheme scheme = Scheme::CrankNicolson;
  SolverConfig solver;
  const Decomposition* decomposition = nullptr;  // required for DomainSplitting
  int threads = 1;
  /// Abort once the energy norm exceeds this multiple of the initial one
  /// (0 disables the detector).
  double blowup_factor = 0.0;
};

struct IntegrationResult {
  State final_state;
  int steps = 0;
  bool blew_up = false;
  double initial_energy = 0.0;
  double final_energy = 0.0;
};

using StepObserver = std::function<void(int step, const State& state)>;

IntegrationResult integrate(const DiscreteOperators& ops, StepContext& ctx, const IntegratorConfig& config,
                            State initial, int n_steps, const StepObserver& observer = {});

struct StabilityBounds {
  double tau_max_lf = 0.0;
  double tau_max_ds = 0.0;
};

/// tau_max_lf = 2 / sqrt(||L_h||), tau_max_ds = ell * tau_max_lf.
StabilityBounds stability_bounds(double operator_norm, int ell);
StabilityBounds stability_bounds(const DiscreteOperators& ops, int ell);

}  // namespace dsw
