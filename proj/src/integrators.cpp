#include "dsw/integrators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace dsw {

StepContext::StepContext(const SimplicialMesh& mesh, double tau, SpaceTimeFunction forcing)
    : mesh_(&mesh), tau_(tau), forcing_(std::move(forcing)) {
  if (!(tau > 0.0)) throw std::invalid_argument("step size must be positive");
}

const Vector& StepContext::forcing_mean(double t_prev) {
  if (cached_t_ && *cached_t_ == t_prev) return cached_mean_;
  const std::size_t n = mesh_->num_nodes();
  if (!forcing_) {
    cached_mean_.assign(n, 0.0);
    cached_t_ = t_prev;
    return cached_mean_;
  }
  auto sample = [&](double t) {
    Vector values(n);
    for (std::size_t j = 0; j < n; ++j) values[j] = forcing_(mesh_->node(j), t);
    return values;
  };
  Vector previous = (last_t_ && *last_t_ == t_prev) ? std::move(last_values_) : sample(t_prev);
  Vector next = sample(t_prev + tau_);
  cached_mean_.resize(n);
  for (std::size_t j = 0; j < n; ++j) cached_mean_[j] = 0.5 * (next[j] + previous[j]);
  cached_t_ = t_prev;
  last_t_ = t_prev + tau_;
  last_values_ = std::move(next);
  return cached_mean_;
}

double StepContext::forcing_mean_at(std::size_t node, double t_prev) const {
  if (!forcing_) return 0.0;
  const Point& x = mesh_->node(node);
  return 0.5 * (forcing_(x, t_prev + tau_) + forcing_(x, t_prev));
}

namespace {

struct NodeUpdate {
  double q;
  double p;
};

NodeUpdate leapfrog_node(const DiscreteOperators& ops, std::size_t j, std::span<const double> q,
                         std::span<const double> p, double tau, double fbar) {
  const double half = 0.5 * tau;
  auto cols = ops.stiffness.row_columns(j);
  auto vals = ops.stiffness.row_values(j);
  double sum = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const int c = cols[k];
    const double q_half = ops.dirichlet_mask[c] ? 0.0 : q[c] + half * p[c];
    sum += vals[k] * q_half;
  }
  const double p_new = p[j] - tau * (sum / ops.lumped_mass[j]) + tau * fbar;
  return {(q[j] + half * p[j]) + half * p_new, p_new};
}

void check_state(const DiscreteOperators& ops, const State& state) {
  if (state.q.size() != ops.size() || state.p.size() != ops.size())
    throw std::invalid_argument("state size does not match the operators");
}

SubdomainSystem build_system(const DiscreteOperators& ops, std::vector<int> nodes, std::vector<std::uint8_t> fixed,
                             std::vector<std::uint8_t> interface, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("step size must be positive");
  SubdomainSystem sys;
  sys.nodes = std::move(nodes);
  sys.fixed = std::move(fixed);
  sys.interface = std::move(interface);
  sys.tau = tau;

  const std::size_t n = sys.nodes.size();
  std::vector<int> global_to_local(ops.size(), -1);
  for (std::size_t l = 0; l < n; ++l) global_to_local[sys.nodes[l]] = static_cast<int>(l);

  sys.mass.resize(n);
  std::vector<Triplet> k_entries, a_entries;
  const double quarter_tau2 = 0.25 * tau * tau;
  bool any_free = false;
  for (std::size_t l = 0; l < n; ++l) {
    const int j = sys.nodes[l];
    sys.mass[l] = ops.lumped_mass[j];
    if (sys.fixed[l]) continue;
    any_free = true;
    auto cols = ops.stiffness.row_columns(j);
    auto vals = ops.stiffness.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const int c = global_to_local[cols[k]];
      if (c < 0) throw std::logic_error("free subdomain node couples to a node outside the subdomain");
      k_entries.push_back({static_cast<int>(l), c, vals[k]});
      const double diag = cols[k] == j ? ops.lumped_mass[j] : 0.0;
      a_entries.push_back({static_cast<int>(l), c, diag + quarter_tau2 * vals[k]});
    }
  }
  if (!any_free) throw std::invalid_argument("subdomain system has no free node");
  sys.stiffness = SparseMatrix::from_triplets(n, k_entries);
  sys.full = SparseMatrix::from_triplets(n, a_entries);
  sys.system = sys.full.with_identity_rows(sys.fixed);
  return sys;
}

}  // namespace

double leapfrog_q_at(const DiscreteOperators& ops, std::size_t node, std::span<const double> q,
                     std::span<const double> p, double tau, double fbar) {
  return leapfrog_node(ops, node, q, p, tau, fbar).q;
}

State leapfrog_step(const DiscreteOperators& ops, StepContext& ctx, const State& state) {
  check_state(ops, state);
  const double tau = ctx.tau();
  const Vector& fbar = ctx.forcing_mean(state.t);
  State out(ops.size(), state.t + tau);
  for (std::size_t j = 0; j < ops.size(); ++j) {
    if (ops.dirichlet_mask[j]) continue;
    const NodeUpdate u = leapfrog_node(ops, j, state.q, state.p, tau, fbar[j]);
    out.q[j] = u.q;
    out.p[j] = u.p;
  }
  return out;
}

SubdomainSystem prepare_global_system(const DiscreteOperators& ops, double tau) {
  std::vector<int> nodes(ops.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) nodes[j] = static_cast<int>(j);
  SubdomainSystem sys = build_system(ops, std::move(nodes), ops.dirichlet_mask,
                                     std::vector<std::uint8_t>(ops.size(), 0), tau);
  sys.id = 0;
  return sys;
}

SubdomainSystem prepare_subdomain_system(const DiscreteOperators& ops, const Decomposition& decomposition, int i,
                                         double tau) {
  const Subdomain& sub = decomposition.subdomains.at(i);
  const std::size_t n = sub.overlap.size();
  std::vector<std::uint8_t> fixed(n), interface(n);
  for (std::size_t l = 0; l < n; ++l) {
    fixed[l] = sub.role[l] != NodeRole::Interior;
    interface[l] = sub.role[l] == NodeRole::ArtificialInterface;
  }
  SubdomainSystem sys = build_system(ops, sub.overlap.nodes, std::move(fixed), std::move(interface), tau);
  sys.id = i;
  return sys;
}

State subdomain_cn_step(const SubdomainSystem& system, std::span<const double> fbar, const State& local,
                        std::span<const double> boundary_q, const SolverConfig& solver) {
  const std::size_t n = system.size();
  if (local.q.size() != n || local.p.size() != n) throw std::invalid_argument("local state size mismatch");
  const double tau = system.tau;
  const double half_tau2 = 0.5 * tau * tau;

  Vector lifted(n, 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    if (system.interface[l]) {
      if (boundary_q.size() != n) throw std::invalid_argument("missing interface data");
      lifted[l] = boundary_q[l] - local.q[l];
    }
  }
  const Vector lift = spmv(system.full, lifted);

  Vector rhs(n);
  for (std::size_t l = 0; l < n; ++l) {
    if (system.fixed[l]) {
      rhs[l] = lifted[l];
      continue;
    }
    const double m = system.mass[l];
    const double f = fbar.empty() ? 0.0 : fbar[system.nodes[l]];
    rhs[l] = -half_tau2 * system.stiffness.row_dot(l, local.q) + tau * m * local.p[l] + half_tau2 * m * f - lift[l];
  }

  Vector increment(n, 0.0);
  cg_solve(system.system, rhs, increment, solver);

  State out(n, local.t + tau);
  for (std::size_t l = 0; l < n; ++l) {
    if (system.fixed[l] && !system.interface[l]) continue;  // physical boundary stays zero
    out.q[l] = local.q[l] + increment[l];
    out.p[l] = 2.0 * increment[l] / tau - local.p[l];
  }
  return out;
}

State cn_step(const DiscreteOperators& ops, StepContext& ctx, const State& state, const SolverConfig& solver) {
  check_state(ops, state);
  const SubdomainSystem sys = prepare_global_system(ops, ctx.tau());
  return subdomain_cn_step(sys, ctx.forcing_mean(state.t), state, {}, solver);
}

State apply_one_step_operator(const DiscreteOperators& ops, StepContext& ctx, const State& state, OneStepForm form,
                              const SolverConfig& solver) {
  check_state(ops, state);
  const std::size_t n = ops.size();
  const double tau = ctx.tau();
  const double half = 0.5 * tau;
  const Vector& fbar = ctx.forcing_mean(state.t);
  const Vector lq = apply_Lh(ops, state.q);

  // right-hand side R_+ x + tau (0, fbar)
  Vector rq(n), rp(n);
  const Vector lp = form == OneStepForm::Leapfrog ? apply_Lh(ops, state.p) : Vector(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    rq[j] = state.q[j] + half * state.p[j];
    rp[j] = state.p[j] - half * lq[j] + tau * fbar[j];
    if (form == OneStepForm::Leapfrog) rp[j] -= 0.25 * tau * tau * lp[j];
  }

  State out(n, state.t + tau);
  if (form == OneStepForm::CrankNicolson) {
    // (I + tau^2/4 L) y_q = r_q + tau/2 r_p, then y_p = r_p - tau/2 L y_q
    const SubdomainSystem sys = prepare_global_system(ops, tau);
    Vector rhs(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (!ops.dirichlet_mask[j]) rhs[j] = ops.lumped_mass[j] * (rq[j] + half * rp[j]);
    out.q = cg_solve(sys.system, rhs, solver);
    const Vector ly = apply_Lh(ops, out.q);
    for (std::size_t j = 0; j < n; ++j) out.p[j] = rp[j] - half * ly[j];
  } else {
    // the leapfrog pair eliminates explicitly: y_p = r_p - tau/2 L r_q
    const Vector lr = apply_Lh(ops, rq);
    for (std::size_t j = 0; j < n; ++j) {
      out.p[j] = rp[j] - half * lr[j];
      out.q[j] = rq[j] + half * out.p[j];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (ops.dirichlet_mask[j]) out.q[j] = out.p[j] = 0.0;
  }
  return out;
}

Vector predict_interface_values(const DiscreteOperators& ops, StepContext& ctx, const Decomposition& decomposition,
                                const State& state, PredictionMode mode) {
  check_state(ops, state);
  Vector predicted(ops.size(), 0.0);
  if (mode == PredictionMode::Global) {
    const State lf = leapfrog_step(ops, ctx, state);
    for (const Subdomain& sub : decomposition.subdomains)
      for (int j : sub.artificial_interface_nodes) predicted[j] = lf.q[j];
    return predicted;
  }
  std::vector<std::uint8_t> done(ops.size(), 0);
  for (const Subdomain& sub : decomposition.subdomains) {
    for (int j : sub.artificial_interface_nodes) {
      if (done[j]) continue;
      done[j] = 1;
      predicted[j] = leapfrog_q_at(ops, j, state.q, state.p, ctx.tau(), ctx.forcing_mean_at(j, state.t));
    }
  }
  return predicted;
}

DomainSplitting::DomainSplitting(const DiscreteOperators& ops, const Decomposition& decomposition, double tau,
                                 SolverConfig solver, int threads)
    : ops_(&ops),
      decomposition_(&decomposition),
      solver_(solver),
      pool_(std::make_unique<WorkerPool>(std::max(1, threads))) {
  // the averaging plan needs the mesh, which arrives with the first step
  systems_.reserve(decomposition.n_sub());
  for (int i = 0; i < decomposition.n_sub(); ++i)
    systems_.push_back(prepare_subdomain_system(ops, decomposition, i, tau));
}

State DomainSplitting::step(StepContext& ctx, const State& state) {
  check_state(*ops_, state);
  if (std::abs(ctx.tau() - systems_.front().tau) > 0.0)
    throw std::invalid_argument("step size differs from the prepared subdomain systems");
  if (plan_.offsets.empty()) plan_ = build_averaging_plan(ctx.mesh(), *decomposition_);

  const Vector& fbar = ctx.forcing_mean(state.t);
  const Vector predicted = predict_interface_values(*ops_, ctx, *decomposition_, state, prediction_mode_);

  std::vector<State> local(systems_.size());
  pool_->parallel_for(systems_.size(), [&](std::size_t i) {
    const int id = static_cast<int>(i);
    const State restricted = restrict_to_subdomain(*decomposition_, id, state);
    const Vector boundary = restrict_to_subdomain(*decomposition_, id, predicted);
    local[i] = subdomain_cn_step(systems_[i], fbar, restricted, boundary, solver_);
  });

  State out = apply_averaging(plan_, local);
  out.t = state.t + ctx.tau();
  return out;
}

State ds_step(const DiscreteOperators& ops, StepContext& ctx, const Decomposition& decomposition, const State& state,
              const SolverConfig& solver) {
  DomainSplitting stepper(ops, decomposition, ctx.tau(), solver);
  return stepper.step(ctx, state);
}

const char* scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::Leapfrog: return "LF";
    case Scheme::CrankNicolson: return "CN";
    case Scheme::DomainSplitting: return "DS";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "LF" || name == "lf" || name == "leapfrog") return Scheme::Leapfrog;
  if (name == "CN" || name == "cn" || name == "crank-nicolson") return Scheme::CrankNicolson;
  if (name == "DS" || name == "ds" || name == "domain-splitting") return Scheme::DomainSplitting;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected lf, cn or ds)");
}

IntegrationResult integrate(const DiscreteOperators& ops, StepContext& ctx, const IntegratorConfig& config,
                            State initial, int n_steps, const StepObserver& observer) {
  if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
  check_state(ops, initial);

  std::function<State(const State&)> step;
  std::unique_ptr<DomainSplitting> splitting;
  std::optional<SubdomainSystem> global;
  switch (config.scheme) {
    case Scheme::Leapfrog:
      step = [&](const State& s) { return leapfrog_step(ops, ctx, s); };
      break;
    case Scheme::CrankNicolson:
      global = prepare_global_system(ops, ctx.tau());
      step = [&](const State& s) {
        return subdomain_cn_step(*global, ctx.forcing_mean(s.t), s, {}, config.solver);
      };
      break;
    case Scheme::DomainSplitting:
      if (!config.decomposition) throw std::invalid_argument("domain splitting needs a decomposition");
      splitting = std::make_unique<DomainSplitting>(ops, *config.decomposition, ctx.tau(), config.solver,
                                                    config.threads);
      step = [&](const State& s) { return splitting->step(ctx, s); };
      break;
  }

  IntegrationResult result;
  result.initial_energy = energy_norm(ops, initial.q, initial.p);
  result.final_energy = result.initial_energy;
  const double t0 = initial.t;
  result.final_state = std::move(initial);
  const double limit = config.blowup_factor * std::max(result.initial_energy, 1e-300);
  for (int n = 1; n <= n_steps; ++n) {
    State next = step(result.final_state);
    next.t = t0 + n * ctx.tau();
    result.final_state = std::move(next);
    result.steps = n;
    if (observer) observer(n, result.final_state);
    if (config.blowup_factor > 0.0) {
      result.final_energy = energy_norm(ops, result.final_state.q, result.final_state.p);
      if (!std::isfinite(result.final_energy) || result.final_energy > limit) {
        result.blew_up = true;
        return result;
      }
    }
  }
  result.final_energy = energy_norm(ops, result.final_state.q, result.final_state.p);
  if (!std::isfinite(result.final_energy)) result.blew_up = true;
  return result;
}

StabilityBounds stability_bounds(double operator_norm, int ell) {
  if (!(operator_norm > 0.0)) throw std::invalid_argument("operator norm must be positive");
  const double lf = 2.0 / std::sqrt(operator_norm);
  return {lf, ell * lf};
}

StabilityBounds stability_bounds(const DiscreteOperators& ops, int ell) {
  return stability_bounds(operator_norm_estimate(ops), ell);
}

}  // namespace dsw
