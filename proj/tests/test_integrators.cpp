#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "dsw/integrators.hpp"
#include "dsw/mesh.hpp"
#include "dsw/problems.hpp"
#include "support.hpp"

using namespace dsw;
using dsw::testing::max_abs_diff;

namespace {

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// one free node with mass 1 and stiffness lambda
DiscreteOperators scalar_model(double lambda) {
  DiscreteOperators ops;
  ops.lumped_mass = {1.0};
  ops.stiffness = SparseMatrix::from_triplets(1, std::vector<Triplet>{{0, 0, lambda}});
  ops.dirichlet_mask = {0};
  return ops;
}

Decomposition decompose(const SimplicialMesh& mesh, int nx, int ny, int ell) {
  return grow_overlap(mesh, build_adjacency(mesh), partition_blocks(mesh, nx, ny), ell);
}

double distance(const DiscreteOperators& ops, const State& a, const State& b) {
  Vector dq(a.q.size()), dp(a.p.size());
  for (std::size_t j = 0; j < dq.size(); ++j) {
    dq[j] = a.q[j] - b.q[j];
    dp[j] = a.p[j] - b.p[j];
  }
  return energy_norm(ops, dq, dp);
}

}  // namespace

TEST_CASE("forcing mean caches endpoint samples") {
  const SimplicialMesh mesh = build_unit_square_mesh(4, 4);
  const ProblemSpec problem = problem_2d();
  StepContext ctx(mesh, 0.1, problem.forcing);
  const Vector first = ctx.forcing_mean(0.0);
  const Vector second = ctx.forcing_mean(0.1);
  for (std::size_t j = 0; j < mesh.num_nodes(); ++j) {
    const Point& x = mesh.node(j);
    CHECK(first[j] == 0.5 * (problem.forcing(x, 0.1) + problem.forcing(x, 0.0)));
    CHECK(second[j] == 0.5 * (problem.forcing(x, 0.1 + 0.1) + problem.forcing(x, 0.1)));
    CHECK(second[j] == ctx.forcing_mean_at(j, 0.1));
  }
  StepContext none(mesh, 0.1);
  for (double v : none.forcing_mean(0.3)) CHECK(v == 0.0);
  CHECK_THROWS_AS(StepContext(mesh, 0.0), std::invalid_argument);
}

TEST_CASE("leapfrog: free flight without stiffness") {
  DiscreteOperators ops;
  ops.lumped_mass = {1.0, 2.0, 0.5};
  ops.stiffness = SparseMatrix::from_triplets(3, std::vector<Triplet>{});
  ops.dirichlet_mask = {0, 0, 0};
  const SimplicialMesh mesh = build_interval_mesh(2);
  StepContext ctx(mesh, 0.3);
  const State s({1.0, -2.0, 0.5}, {0.25, 1.0, -4.0}, 0.0);
  const State out = leapfrog_step(ops, ctx, s);
  for (int j = 0; j < 3; ++j) {
    CHECK(out.q[j] == doctest::Approx(s.q[j] + 0.3 * s.p[j]).epsilon(1e-15));
    CHECK(out.p[j] == s.p[j]);
  }
  CHECK(out.t == doctest::Approx(0.3));
}

TEST_CASE("leapfrog: scalar model by hand") {
  const double lambda = 3.0, tau = 0.4;
  const DiscreteOperators ops = scalar_model(lambda);
  const SimplicialMesh mesh = build_interval_mesh(1);
  StepContext ctx(mesh, tau);
  const State out = leapfrog_step(ops, ctx, State({1.0}, {0.0}, 0.0));
  CHECK(out.q[0] == doctest::Approx(1.0 - tau * tau * lambda / 2).epsilon(1e-15));
  // drift-kick-drift: the kick uses q + (tau/2) p = 1
  CHECK(out.p[0] == doctest::Approx(-tau * lambda).epsilon(1e-15));
}

TEST_CASE("crank-nicolson: scalar model by hand") {
  const double lambda = 5.0, tau = 0.3;
  const DiscreteOperators ops = scalar_model(lambda);
  const SimplicialMesh mesh = build_interval_mesh(1);
  StepContext ctx(mesh, tau);
  const double q = 0.7, p = -1.2;
  const State out = cn_step(ops, ctx, State({q}, {p}, 0.0));
  const double a = tau * tau * lambda / 4;
  const double qn = ((1 - a) * q + tau * p) / (1 + a);
  CHECK(out.q[0] == doctest::Approx(qn).epsilon(1e-12));
  CHECK(out.p[0] == doctest::Approx(2 * (qn - q) / tau - p).epsilon(1e-12));
}

TEST_CASE("crank-nicolson: vanishing step returns the input") {
  const SimplicialMesh mesh = build_interval_mesh(100);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const State s = initial_state(mesh, problem_1d());
  StepContext ctx(mesh, 1e-14);
  const State out = cn_step(ops, ctx, s);
  CHECK(max_abs_diff(out.q, s.q) <= 1e-10);
  CHECK(max_abs_diff(out.p, s.p) <= 1e-10);
}

TEST_CASE("crank-nicolson conserves the energy norm") {
  std::mt19937_64 rng(51);
  for (const SimplicialMesh& mesh : {build_interval_mesh(200, 0.2, 3), build_unit_square_mesh(20, 20)}) {
    const DiscreteOperators ops = assemble_operators(mesh, 1.0);
    const double tau = 2.0 * mesh.h_max();
    StepContext ctx(mesh, tau);
    State s = dsw::testing::random_state(ops, rng);
    const SolverConfig solver{1e-12, 10000};
    for (int n = 0; n < 10; ++n) {
      const State next = cn_step(ops, ctx, s, solver);
      const double e0 = energy_norm(ops, s.q, s.p), e1 = energy_norm(ops, next.q, next.p);
      CHECK(std::abs(e1 - e0) <= 1e-10 * e0);
      CHECK(std::abs(e1 - e0) <= 10 * solver.tol * e0);
      s = next;
    }
  }
}

TEST_CASE("one-step operator forms match the steppers") {
  std::mt19937_64 rng(61);
  const SimplicialMesh mesh = build_interval_mesh(50, 0.2, 7);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const double tau = 0.8 * stability_bounds(ops, 1).tau_max_lf;
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double c = amp(rng);
    auto forcing = [c](const Point& x, double t) { return c * std::sin(7 * x[0] + 3 * t); };
    StepContext ctx(mesh, tau, forcing);
    State s = dsw::testing::random_state(ops, rng);
    s.t = 0.1 * trial;
    const State cn = cn_step(ops, ctx, s);
    const State rcn = apply_one_step_operator(ops, ctx, s, OneStepForm::CrankNicolson);
    CHECK(max_abs_diff(cn.q, rcn.q) <= 1e-10);
    CHECK(max_abs_diff(cn.p, rcn.p) <= 1e-10);
    const State lf = leapfrog_step(ops, ctx, s);
    const State rlf = apply_one_step_operator(ops, ctx, s, OneStepForm::Leapfrog);
    CHECK(max_abs_diff(lf.q, rlf.q) <= 1e-12);
    CHECK(max_abs_diff(lf.p, rlf.p) <= 1e-12);
  }
}

TEST_CASE("the CN operator is unitary in the energy norm") {
  std::mt19937_64 rng(62);
  const SimplicialMesh mesh = build_unit_square_mesh(10, 10);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  StepContext ctx(mesh, 0.37);
  for (int trial = 0; trial < 20; ++trial) {
    const State z = dsw::testing::random_state(ops, rng);
    const State rz = apply_one_step_operator(ops, ctx, z, OneStepForm::CrankNicolson);
    CHECK(energy_norm(ops, rz.q, rz.p) == doctest::Approx(energy_norm(ops, z.q, z.p)).epsilon(1e-10));
  }
}

TEST_CASE("leapfrog is unstable beyond the CFL bound") {
  std::mt19937_64 rng(71);
  const SimplicialMesh mesh = build_interval_mesh(100);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const double tau = 1.05 * stability_bounds(ops, 1).tau_max_lf;
  StepContext ctx(mesh, tau);
  IntegratorConfig config;
  config.scheme = Scheme::Leapfrog;
  const State s = dsw::testing::random_state(ops, rng);
  const IntegrationResult r = integrate(ops, ctx, config, s, 200);
  CHECK(r.final_energy > 10.0 * r.initial_energy);

  // the growth rate agrees with the dense spectral radius of the step matrix
  std::vector<int> free;
  const Eigen::MatrixXd l = dsw::testing::dense_Lh(ops, free);
  const Eigen::Index n = l.rows();
  Eigen::MatrixXd step(2 * n, 2 * n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  // p' = p - tau L (q + tau/2 p); q' = q + tau/2 p + tau/2 p'
  const Eigen::MatrixXd pq = -tau * l, pp = id - 0.5 * tau * tau * l;
  step << id + 0.5 * tau * pq, 0.5 * tau * id + 0.5 * tau * pp, pq, pp;
  const double radius = step.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(radius > 1.5);
}

TEST_CASE("interface prediction: local and global modes agree bitwise") {
  std::mt19937_64 rng(81);
  const SimplicialMesh mesh = build_unit_square_mesh(16, 16);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const ProblemSpec problem = problem_2d();
  const Decomposition d = decompose(mesh, 2, 2, 2);
  StepContext ctx(mesh, 0.01, problem.forcing);
  const State s = dsw::testing::random_state(ops, rng);
  const Vector local = predict_interface_values(ops, ctx, d, s, PredictionMode::Local);
  const Vector global = predict_interface_values(ops, ctx, d, s, PredictionMode::Global);
  CHECK(bitwise_equal(local, global));
  const State lf = leapfrog_step(ops, ctx, s);
  for (const Subdomain& sub : d.subdomains)
    for (int j : sub.artificial_interface_nodes) CHECK(local[j] == lf.q[j]);

  StepContext quiet(mesh, 0.01);
  for (double v : predict_interface_values(ops, quiet, d, State(mesh.num_nodes()))) CHECK(v == 0.0);
}

TEST_CASE("interface prediction only reads the interface 1-ring") {
  std::mt19937_64 rng(82);
  const SimplicialMesh mesh = build_unit_square_mesh(12, 12);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const Decomposition d = decompose(mesh, 2, 1, 2);
  StepContext ctx(mesh, 0.02);
  const State s = dsw::testing::random_state(ops, rng);
  const Vector base = predict_interface_values(ops, ctx, d, s);

  std::vector<std::uint8_t> ring(mesh.num_nodes(), 0);
  for (const Subdomain& sub : d.subdomains)
    for (int j : sub.artificial_interface_nodes)
      for (int c : ops.stiffness.row_columns(j)) ring[c] = 1;
  State perturbed = s;
  for (std::size_t j = 0; j < mesh.num_nodes(); ++j) {
    if (ring[j] || mesh.on_boundary(j)) continue;
    perturbed.q[j] += 100.0;
    perturbed.p[j] -= 50.0;
  }
  CHECK(bitwise_equal(predict_interface_values(ops, ctx, d, perturbed), base));
}

TEST_CASE("subdomain systems") {
  const SimplicialMesh mesh = build_interval_mesh(40);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const double tau = 0.03;
  const SubdomainSystem global = prepare_global_system(ops, tau);

  const Decomposition one = decompose(mesh, 1, 1, 0);
  const SubdomainSystem whole = prepare_subdomain_system(ops, one, 0, tau);
  CHECK((dsw::testing::dense(whole.system) - dsw::testing::dense(global.system)).cwiseAbs().maxCoeff() == 0.0);

  const Decomposition two = decompose(mesh, 2, 1, 3);
  for (int i = 0; i < 2; ++i) {
    const SubdomainSystem sys = prepare_subdomain_system(ops, two, i, tau);
    CHECK(sys.size() == two.subdomains[i].overlap.size());
    CHECK(sys.system.is_symmetric());
    std::mt19937_64 rng(90 + i);
    const Vector b = dsw::testing::random_vector(sys.size(), rng);
    CHECK_NOTHROW(cg_solve(sys.system, b));
    const Eigen::VectorXd ev = dsw::testing::dense(sys.system).selfadjointView<Eigen::Lower>().eigenvalues();
    CHECK(ev.minCoeff() > 0.0);
  }
  CHECK_THROWS_AS(prepare_subdomain_system(ops, two, 0, 0.0), std::invalid_argument);
}

TEST_CASE("subdomain step reproduces the global step from exact boundary data") {
  std::mt19937_64 rng(91);
  const SimplicialMesh mesh = build_unit_square_mesh(14, 14);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const ProblemSpec problem = problem_2d();
  const Decomposition d = decompose(mesh, 2, 2, 2);
  const double tau = 0.02;
  StepContext ctx(mesh, tau, problem.forcing);
  const State s = dsw::testing::random_state(ops, rng);
  // p is recovered as 2 d / tau - p, which amplifies the solver residual by 2 / tau
  const SolverConfig tight{1e-15, 10000};
  const State cn = cn_step(ops, ctx, s, tight);
  for (int i = 0; i < d.n_sub(); ++i) {
    const SubdomainSystem sys = prepare_subdomain_system(ops, d, i, tau);
    const State local = subdomain_cn_step(sys, ctx.forcing_mean(s.t), restrict_to_subdomain(d, i, s),
                                          restrict_to_subdomain(d, i, cn.q), tight);
    const State expected = restrict_to_subdomain(d, i, cn);
    CHECK(max_abs_diff(local.q, expected.q) <= 1e-10);
    for (std::size_t l = 0; l < sys.size(); ++l)
      if (!sys.interface[l]) CHECK(std::abs(local.p[l] - expected.p[l]) <= 1e-10);
  }
}

TEST_CASE("subdomain step: zero in, zero out") {
  const SimplicialMesh mesh = build_interval_mesh(30);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const Decomposition d = decompose(mesh, 2, 1, 2);
  const SubdomainSystem sys = prepare_subdomain_system(ops, d, 0, 0.05);
  const State out = subdomain_cn_step(sys, {}, State(sys.size()), Vector(sys.size(), 0.0), {});
  for (double v : out.q) CHECK(v == 0.0);
  for (double v : out.p) CHECK(v == 0.0);
}

TEST_CASE("local difference satisfies z_q = tau/2 z_p") {
  std::mt19937_64 rng(92);
  const SimplicialMesh mesh = build_interval_mesh(80, 0.2, 4);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const Decomposition d = decompose(mesh, 2, 1, 4);
  const double tau = 0.01;
  StepContext ctx(mesh, tau);
  const State s = dsw::testing::random_state(ops, rng);
  const State cn = cn_step(ops, ctx, s);
  const Vector predicted = predict_interface_values(ops, ctx, d, s);
  for (int i = 0; i < d.n_sub(); ++i) {
    const SubdomainSystem sys = prepare_subdomain_system(ops, d, i, tau);
    const State local = subdomain_cn_step(sys, ctx.forcing_mean(0.0), restrict_to_subdomain(d, i, s),
                                          restrict_to_subdomain(d, i, predicted), {});
    const State global = restrict_to_subdomain(d, i, cn);
    for (std::size_t l = 0; l < sys.size(); ++l) {
      if (sys.fixed[l]) continue;
      const double zq = local.q[l] - global.q[l], zp = local.p[l] - global.p[l];
      CHECK(std::abs(zq - 0.5 * tau * zp) <= 1e-10);
    }
  }
}

TEST_CASE("domain splitting reduces to CN without artificial interfaces") {
  const SimplicialMesh mesh = build_unit_square_mesh(12, 12);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const ProblemSpec problem = problem_2d();
  const double tau = 0.05;
  for (const Decomposition& d : {decompose(mesh, 1, 1, 0), decompose(mesh, 2, 2, 30)}) {
    StepContext ctx(mesh, tau, problem.forcing);
    DomainSplitting ds(ops, d, tau);
    State a = initial_state(mesh, problem), b = a;
    for (int n = 0; n < 10; ++n) {
      a = ds.step(ctx, a);
      b = cn_step(ops, ctx, b);
      CHECK(max_abs_diff(a.q, b.q) <= 1e-10);
      CHECK(max_abs_diff(a.p, b.p) <= 1e-10);
    }
  }
}

TEST_CASE("one DS step stays close to CN for smooth states") {
  const SimplicialMesh mesh = build_interval_mesh(400);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const Decomposition d = decompose(mesh, 2, 1, 8);
  const StabilityBounds bounds = stability_bounds(ops, 8);
  const State s = initial_state(mesh, problem_1d());
  double previous = std::numeric_limits<double>::infinity();
  for (double tau : {bounds.tau_max_ds / 2, bounds.tau_max_lf * 2, bounds.tau_max_lf}) {
    StepContext ctx(mesh, tau);
    const State ds = ds_step(ops, ctx, d, s);
    const State cn = cn_step(ops, ctx, s);
    const double gap = distance(ops, ds, cn) / energy_norm(ops, s.q, s.p);
    CHECK(gap < previous);
    if (tau <= 2 * bounds.tau_max_lf) CHECK(gap <= 1e-6);
    previous = gap;
  }
}

TEST_CASE("domain splitting is independent of the worker count") {
  const SimplicialMesh mesh = build_unit_square_mesh(24, 24);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const ProblemSpec problem = problem_2d();
  const Decomposition d = decompose(mesh, 3, 3, 2);
  const double tau = 0.02;
  std::vector<State> results;
  for (int threads : {1, 2, 4}) {
    StepContext ctx(mesh, tau, problem.forcing);
    DomainSplitting ds(ops, d, tau, {}, threads);
    State s = initial_state(mesh, problem);
    for (int n = 0; n < 5; ++n) s = ds.step(ctx, s);
    results.push_back(s);
  }
  for (std::size_t k = 1; k < results.size(); ++k) {
    CHECK(bitwise_equal(results[k].q, results[0].q));
    CHECK(bitwise_equal(results[k].p, results[0].p));
  }
}

TEST_CASE("integrate") {
  const SimplicialMesh mesh = build_interval_mesh(100);
  const DiscreteOperators ops = assemble_operators(mesh, 1.0);
  const State s0 = initial_state(mesh, problem_1d());
  StepContext ctx(mesh, 0.01);

  IntegratorConfig config;
  const IntegrationResult none = integrate(ops, ctx, config, s0, 0);
  CHECK(none.steps == 0);
  CHECK(bitwise_equal(none.final_state.q, s0.q));
  CHECK(bitwise_equal(none.final_state.p, s0.p));

  int observed = 0;
  const IntegrationResult cn = integrate(ops, ctx, config, s0, 100, [&](int, const State&) { ++observed; });
  CHECK(observed == 100);
  CHECK(cn.final_state.t == doctest::Approx(1.0));
  CHECK(std::abs(cn.final_energy - cn.initial_energy) <= 1e-8 * cn.initial_energy);

  config.scheme = Scheme::DomainSplitting;
  CHECK_THROWS_AS(integrate(ops, ctx, config, s0, 1), std::invalid_argument);
  CHECK_THROWS_AS(integrate(ops, ctx, IntegratorConfig{}, s0, -1), std::invalid_argument);

  // blow-up detector stops early
  StepContext fast(mesh, 1.2 * stability_bounds(ops, 1).tau_max_lf);
  IntegratorConfig lf;
  lf.scheme = Scheme::Leapfrog;
  lf.blowup_factor = 1e3;
  const IntegrationResult r = integrate(ops, fast, lf, s0, 100000);
  CHECK(r.blew_up);
  CHECK(r.steps < 100000);
}

TEST_CASE("stability bounds") {
  const DiscreteOperators ops = assemble_operators(build_interval_mesh(4), 1.0);
  const StabilityBounds b1 = stability_bounds(ops, 1);
  CHECK(b1.tau_max_lf == doctest::Approx(0.27060).epsilon(1e-4));
  CHECK(b1.tau_max_ds == b1.tau_max_lf);
  const StabilityBounds b8 = stability_bounds(ops, 8);
  CHECK(b8.tau_max_ds == doctest::Approx(8 * b8.tau_max_lf).epsilon(1e-15));
  CHECK_THROWS_AS(stability_bounds(0.0, 1), std::invalid_argument);
}

TEST_CASE("scheme names") {
  CHECK(parse_scheme("lf") == Scheme::Leapfrog);
  CHECK(parse_scheme("CN") == Scheme::CrankNicolson);
  CHECK(parse_scheme("ds") == Scheme::DomainSplitting);
  CHECK(std::string(scheme_name(Scheme::DomainSplitting)) == "DS");
  CHECK_THROWS_AS(parse_scheme("rk4"), std::invalid_argument);
}
