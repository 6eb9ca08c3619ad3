#include "dsw/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace dsw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(trim(text));
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const std::string& item : split_list(text)) out.push_back(parse_value<T>(key, item));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw ConfigError("grid '" + text + "' is not of the form NxM");
  return {parse_value<int>("splitting.grid", text.substr(0, x)), parse_value<int>("splitting.grid", text.substr(x + 1))};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

struct Setup {
  ProblemSpec problem;
  SimplicialMesh mesh;
  NodeAdjacency adjacency;
  DiscreteOperators ops;
  double final_time;
  double tau_lf;
};

Setup make_setup(const ExperimentConfig& config) {
  config.validate();
  ProblemSpec problem = problem_by_id(config.problem);
  SimplicialMesh mesh = build_mesh(config);
  NodeAdjacency adjacency = build_adjacency(mesh);
  DiscreteOperators ops = assemble_operators(mesh, problem.kappa);
  const double tau_lf = stability_bounds(operator_norm_estimate(ops), 1).tau_max_lf;
  const double final_time = config.final_time.value_or(problem.final_time);
  return {std::move(problem), std::move(mesh), std::move(adjacency), std::move(ops), final_time, tau_lf};
}

Decomposition make_decomposition(const Setup& setup, std::pair<int, int> grid, int ell) {
  return grow_overlap(setup.mesh, setup.adjacency, partition_blocks(setup.mesh, grid.first, grid.second), ell);
}

struct Run {
  IntegrationResult result;
  double wall_ms = 0.0;
};

Run run_scheme(const Setup& setup, const ExperimentConfig& config, Scheme scheme, const Decomposition* dec,
               double tau, int n_steps) {
  StepContext ctx(setup.mesh, tau, setup.problem.forcing);
  IntegratorConfig ic;
  ic.scheme = scheme;
  ic.solver = config.solver;
  ic.decomposition = dec;
  ic.threads = config.threads;
  ic.blowup_factor = config.blowup_factor;
  const auto start = std::chrono::steady_clock::now();
  Run run;
  run.result = integrate(setup.ops, ctx, ic, initial_state(setup.mesh, setup.problem), n_steps);
  if (config.timing) run.wall_ms = elapsed_ms(start);
  return run;
}

ResultRow base_row(const ExperimentConfig& config, const Setup& setup, Scheme scheme) {
  ResultRow row;
  row.experiment = config.name;
  row.scheme = scheme_name(scheme);
  row.h_min = setup.mesh.h_min();
  row.h_max = setup.mesh.h_max();
  row.delta = kNaN;
  row.lambda = kNaN;
  row.ratio = kNaN;
  return row;
}

double state_distance(const DiscreteOperators& ops, const State& a, const State& b) {
  Vector dq(a.q.size()), dp(a.p.size());
  for (std::size_t j = 0; j < dq.size(); ++j) {
    dq[j] = a.q[j] - b.q[j];
    dp[j] = a.p[j] - b.p[j];
  }
  return energy_norm(ops, dq, dp);
}

double exact_error(const Setup& setup, const State& state) {
  if (!setup.problem.has_exact()) return kNaN;
  return error_vs_exact(setup.mesh, setup.ops, state, setup.problem.exact_grad_u, setup.problem.exact_p,
                        default_quad_order(setup.mesh.dim()));
}

void fill_outcome(ResultRow& row, const Setup& setup, const Run& run, const State* reference) {
  row.steps = run.result.steps;
  row.wall_ms = run.wall_ms;
  row.stable = !run.result.blew_up;
  if (!row.stable) {
    row.err_exact = kInf;
    row.err_vs_cn = kInf;
    return;
  }
  row.err_exact = exact_error(setup, run.result.final_state);
  row.err_vs_cn = reference ? state_distance(setup.ops, run.result.final_state, *reference) : 0.0;
}

int steps_to(double final_time, double tau) {
  return std::max(1, static_cast<int>(std::lround(final_time / tau)));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (problem != "1d" && problem != "2d") throw ConfigError("problem must be 1d or 2d");
  if (final_time && !(*final_time > 0.0)) throw ConfigError("final_time must be positive");
  if (schemes.empty()) throw ConfigError("no scheme configured");
  if (problem == "1d" && (cells < 2 || !(perturb >= 0.0 && perturb < 0.45)))
    throw ConfigError("1d mesh needs cells >= 2 and 0 <= perturb < 0.45");
  if (problem == "2d" && (nx < 2 || ny < 2)) throw ConfigError("2d mesh needs nx, ny >= 2");
  for (double t : taus)
    if (!(t > 0.0)) throw ConfigError("tau must be positive");
  for (double f : cfl_fractions)
    if (!(f > 0.0)) throw ConfigError("cfl_fraction must be positive");
  if (tau_count > 0 && !(tau_min > 0.0 && tau_max >= tau_min)) throw ConfigError("need 0 < tau_min <= tau_max");
  const int sources = !taus.empty() + (tau_count > 0) + !cfl_fractions.empty();
  if (sources > 1) throw ConfigError("give only one of tau, tau_min/tau_max/tau_count, cfl_fraction");
  if (ells.empty()) throw ConfigError("no ell configured");
  for (int ell : ells)
    if (ell < 0) throw ConfigError("ell must be >= 0");
  if (grids.empty()) throw ConfigError("no subdomain grid configured");
  for (auto [gx, gy] : grids)
    if (gx < 1 || gy < 1) throw ConfigError("grid entries must be >= 1");
  if (!(solver.tol > 0.0) || solver.max_iter < 1) throw ConfigError("invalid solver settings");
  if (blowup_factor < 0.0) throw ConfigError("blowup_factor must be >= 0");
  for (double l : lambda_factors)
    if (!(l > 0.0)) throw ConfigError("lambda_h entries must be positive");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"experiment", {"name", "problem", "final_time", "schemes"}},
      {"mesh", {"cells", "perturb", "seed", "nx", "ny"}},
      {"time", {"tau", "tau_min", "tau_max", "tau_count", "cfl_fraction"}},
      {"splitting", {"ell", "grid"}},
      {"solver", {"tol", "max_iter", "blowup_factor"}},
      {"decay", {"lambda_h"}},
      {"output", {"path", "threads", "timing"}},
  };

  ExperimentConfig c;
  for (const auto& [section, entries] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, node] : entries) {
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
      const std::string name = section + "." + key;
      const std::string v = node.data();
      if (name == "experiment.name") c.name = trim(v);
      else if (name == "experiment.problem") c.problem = trim(v);
      else if (name == "experiment.final_time") c.final_time = parse_value<double>(name, v);
      else if (name == "experiment.schemes") {
        c.schemes.clear();
        for (const std::string& s : split_list(v)) {
          try {
            c.schemes.push_back(parse_scheme(s));
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
        }
      }
      else if (name == "mesh.cells") c.cells = parse_value<int>(name, v);
      else if (name == "mesh.perturb") c.perturb = parse_value<double>(name, v);
      else if (name == "mesh.seed") c.seed = parse_value<std::uint64_t>(name, v);
      else if (name == "mesh.nx") c.nx = parse_value<int>(name, v);
      else if (name == "mesh.ny") c.ny = parse_value<int>(name, v);
      else if (name == "time.tau") c.taus = parse_list<double>(name, v);
      else if (name == "time.tau_min") c.tau_min = parse_value<double>(name, v);
      else if (name == "time.tau_max") c.tau_max = parse_value<double>(name, v);
      else if (name == "time.tau_count") c.tau_count = parse_value<int>(name, v);
      else if (name == "time.cfl_fraction") c.cfl_fractions = parse_list<double>(name, v);
      else if (name == "splitting.ell") c.ells = parse_list<int>(name, v);
      else if (name == "splitting.grid") {
        c.grids.clear();
        for (const std::string& g : split_list(v)) c.grids.push_back(parse_grid(g));
      }
      else if (name == "solver.tol") c.solver.tol = parse_value<double>(name, v);
      else if (name == "solver.max_iter") c.solver.max_iter = parse_value<int>(name, v);
      else if (name == "solver.blowup_factor") c.blowup_factor = parse_value<double>(name, v);
      else if (name == "decay.lambda_h") c.lambda_factors = parse_list<double>(name, v);
      else if (name == "output.path") c.output = trim(v);
      else if (name == "output.threads") c.threads = parse_value<int>(name, v);
      else if (name == "output.timing") c.timing = parse_bool(name, v);
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns = {
      "experiment", "scheme", "tau",   "h_min",   "h_max", "ell",   "nx_sub", "ny_sub",
      "err_exact",  "err_vs_cn", "stable", "steps", "wall_ms", "delta", "lambda", "ratio"};
  return columns;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  const auto& columns = csv_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const ResultRow& r : rows) {
    const double err_exact = r.stable ? r.err_exact : kInf;
    const double err_vs_cn = r.stable ? r.err_vs_cn : kInf;
    out << r.experiment << ',' << r.scheme << ',' << format_double(r.tau) << ',' << format_double(r.h_min) << ','
        << format_double(r.h_max) << ',' << r.ell << ',' << r.nx_sub << ',' << r.ny_sub << ','
        << format_double(err_exact) << ',' << format_double(err_vs_cn) << ',' << (r.stable ? "true" : "false")
        << ',' << r.steps << ',' << format_double(r.wall_ms) << ',' << format_double(r.delta) << ','
        << format_double(r.lambda) << ',' << format_double(r.ratio) << '\n';
  }
}

void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(rows, out);
  out.flush();
  if (!out) throw std::runtime_error("write to " + path + " failed");
}

SimplicialMesh build_mesh(const ExperimentConfig& config) {
  if (config.problem == "1d") return build_interval_mesh(config.cells, config.perturb, config.seed);
  return build_unit_square_mesh(config.nx, config.ny);
}

std::vector<double> resolve_taus(const ExperimentConfig& config, double tau_lf, int ell) {
  if (!config.taus.empty()) return config.taus;
  std::vector<double> taus;
  if (config.tau_count > 0) {
    const int m = config.tau_count;
    for (int k = 0; k < m; ++k) {
      const double s = m == 1 ? 0.0 : static_cast<double>(k) / (m - 1);
      taus.push_back(config.tau_max * std::pow(config.tau_min / config.tau_max, s));
    }
    return taus;
  }
  if (!config.cfl_fractions.empty()) {
    for (double f : config.cfl_fractions) taus.push_back(f * std::max(ell, 1) * tau_lf);
    return taus;
  }
  throw ConfigError("no step sizes configured (time.tau, time.tau_min/tau_max/tau_count or time.cfl_fraction)");
}

std::vector<ResultRow> run_convergence(const ExperimentConfig& config, bool require_exact) {
  const Setup setup = make_setup(config);
  if (require_exact && !setup.problem.has_exact())
    throw ConfigError("problem " + config.problem + " has no exact solution");

  const int ell = config.ells.front();
  const auto grid = config.grids.front();
  std::optional<Decomposition> dec;
  if (std::find(config.schemes.begin(), config.schemes.end(), Scheme::DomainSplitting) != config.schemes.end())
    dec = make_decomposition(setup, grid, ell);
  const double delta = dec ? realized_overlap_width(setup.mesh, *dec) : kNaN;

  std::vector<ResultRow> rows;
  for (double tau_request : resolve_taus(config, setup.tau_lf, ell)) {
    const int n = steps_to(setup.final_time, tau_request);
    const double tau = setup.final_time / n;
    const Run cn = run_scheme(setup, config, Scheme::CrankNicolson, nullptr, tau, n);
    const State* reference = cn.result.blew_up ? nullptr : &cn.result.final_state;
    for (Scheme scheme : config.schemes) {
      ResultRow row = base_row(config, setup, scheme);
      row.tau = tau;
      if (scheme == Scheme::CrankNicolson) {
        fill_outcome(row, setup, cn, nullptr);
      } else {
        const Run run = run_scheme(setup, config, scheme, scheme == Scheme::DomainSplitting ? &*dec : nullptr, tau, n);
        fill_outcome(row, setup, run, reference);
        if (row.stable && !reference) row.err_vs_cn = kNaN;
      }
      if (scheme == Scheme::DomainSplitting) {
        row.ell = ell;
        row.nx_sub = grid.first;
        row.ny_sub = setup.mesh.dim() == 2 ? grid.second : 1;
        row.delta = delta;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

CflResult bisect_stability(const StabilityProbe& probe, double start, double resolution) {
  if (!(start > 0.0) || !(resolution > 0.0)) throw std::invalid_argument("bisection needs positive start and resolution");
  CflResult out;
  auto test = [&](double tau) {
    const bool ok = probe(tau);
    out.tried.push_back(tau);
    out.stable.push_back(ok);
    return ok;
  };
  auto failure = [&](const std::string& why) {
    std::ostringstream msg;
    msg << "stability bisection failed (" << why << "); tried tau:";
    for (std::size_t k = 0; k < out.tried.size(); ++k)
      msg << ' ' << format_double(out.tried[k]) << (out.stable[k] ? "(stable)" : "(unstable)");
    return std::runtime_error(msg.str());
  };
  constexpr int kMaxExpansions = 60;

  double lo = 0.0, hi = 0.0;
  if (test(start)) {
    lo = start;
    hi = 2.0 * start;
    int k = 0;
    while (test(hi)) {
      if (++k > kMaxExpansions) throw failure("no unstable step found");
      lo = hi;
      hi *= 2.0;
    }
  } else {
    hi = start;
    lo = 0.5 * start;
    int k = 0;
    while (!test(lo)) {
      if (++k > kMaxExpansions) throw failure("no stable step found");
      hi = lo;
      lo *= 0.5;
    }
  }

  for (int round = 0; round < kMaxExpansions; ++round) {
    while (hi - lo > resolution * lo) {
      const double mid = 0.5 * (lo + hi);
      (test(mid) ? lo : hi) = mid;
    }
    const double check = 1.02 * lo;
    if (!test(check)) {
      out.tau_max = lo;
      return out;
    }
    // stable again above an unstable probe: continue from the larger step
    lo = check;
    hi = 2.0 * check;
    int k = 0;
    while (test(hi)) {
      if (++k > kMaxExpansions) throw failure("no unstable step found");
      lo = hi;
      hi *= 2.0;
    }
  }
  throw failure("no verified stability edge");
}

std::vector<ResultRow> run_cfl_scan(const ExperimentConfig& config) {
  const Setup setup = make_setup(config);
  if (setup.mesh.dim() != 1) throw ConfigError("the CFL scan needs the 1d problem");
  const auto grid = config.grids.front();

  std::vector<ResultRow> rows;
  for (int ell : config.ells) {
    const Decomposition dec = make_decomposition(setup, grid, ell);
    const auto start = std::chrono::steady_clock::now();
    auto probe = [&](double tau) {
      const int n = std::max(1, static_cast<int>(std::ceil(setup.final_time / tau - 1e-9)));
      const Run run = run_scheme(setup, config, Scheme::DomainSplitting, &dec, tau, n);
      return !run.result.blew_up;
    };
    const CflResult cfl = bisect_stability(probe, 0.25 * setup.tau_lf);

    ResultRow row = base_row(config, setup, Scheme::DomainSplitting);
    row.tau = cfl.tau_max;
    row.ell = ell;
    row.nx_sub = grid.first;
    row.ny_sub = 1;
    row.delta = realized_overlap_width(setup.mesh, dec);
    row.err_exact = kNaN;
    row.err_vs_cn = kNaN;
    row.steps = std::max(1, static_cast<int>(std::ceil(setup.final_time / cfl.tau_max - 1e-9)));
    if (config.timing) row.wall_ms = elapsed_ms(start);
    rows.push_back(std::move(row));
  }
  return rows;
}

DecaySample decay_sample(const SimplicialMesh& mesh, double kappa, const Decomposition& decomposition, int i,
                         double lambda, std::span<const double> g, const SolverConfig& solver) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (g.size() != mesh.num_nodes()) throw std::invalid_argument("boundary data must be global indexed");
  const Subdomain& sub = decomposition.subdomains.at(i);
  const DiscreteOperators local = assemble_operators(mesh, kappa, sub.overlap);
  const std::size_t n = sub.overlap.size();

  std::vector<std::uint8_t> fixed(n);
  Vector data(n, 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    fixed[l] = sub.role[l] != NodeRole::Interior;
    if (sub.role[l] == NodeRole::ArtificialInterface) data[l] = g[sub.overlap.nodes[l]];
  }

  const double lambda2 = lambda * lambda;
  std::vector<Triplet> entries;
  for (std::size_t l = 0; l < n; ++l) {
    if (fixed[l]) continue;
    auto cols = local.stiffness.row_columns(l);
    auto vals = local.stiffness.row_values(l);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double diag = static_cast<std::size_t>(cols[k]) == l ? local.lumped_mass[l] : 0.0;
      entries.push_back({static_cast<int>(l), cols[k], diag + lambda2 * vals[k]});
    }
  }
  const SparseMatrix full = SparseMatrix::from_triplets(n, entries);
  const Vector lift = spmv(full, data);
  Vector rhs(n);
  for (std::size_t l = 0; l < n; ++l) rhs[l] = fixed[l] ? data[l] : -lift[l];
  const Vector z = cg_solve(full.with_identity_rows(fixed), rhs, solver);

  DecaySample sample;
  sample.delta = realized_overlap_width(mesh, decomposition, i);
  sample.data_norm = b_norm(local, data, lambda);

  const LocalNumbering owned = LocalNumbering::from_cells(mesh, sub.owned_cells);
  const DiscreteOperators owned_ops = assemble_operators(mesh, kappa, owned);
  Vector z_owned(owned.size());
  for (std::size_t l = 0; l < owned.size(); ++l) z_owned[l] = z[sub.overlap.global_to_local[owned.nodes[l]]];
  sample.inner_norm = b_norm(owned_ops, z_owned, lambda);
  sample.ratio = sample.data_norm > 0.0 ? sample.inner_norm / sample.data_norm : 0.0;
  return sample;
}

std::vector<ResultRow> run_decay_experiment(const ExperimentConfig& config) {
  config.validate();
  const ProblemSpec problem = problem_by_id(config.problem);
  const SimplicialMesh mesh = build_mesh(config);
  const NodeAdjacency adjacency = build_adjacency(mesh);
  const auto grid = config.grids.front();
  const std::vector<int> owner = partition_blocks(mesh, grid.first, grid.second);
  const Vector g(mesh.num_nodes(), 1.0);

  std::vector<ResultRow> rows;
  for (double factor : config.lambda_factors) {
    const double lambda = factor * mesh.h_max();
    for (int ell : config.ells) {
      const Decomposition dec = grow_overlap(mesh, adjacency, owner, ell);
      const auto start = std::chrono::steady_clock::now();
      const DecaySample s = decay_sample(mesh, problem.kappa, dec, 0, lambda, g, config.solver);
      ResultRow row;
      row.experiment = config.name;
      row.scheme = "decay";
      row.tau = kNaN;
      row.h_min = mesh.h_min();
      row.h_max = mesh.h_max();
      row.ell = ell;
      row.nx_sub = grid.first;
      row.ny_sub = mesh.dim() == 2 ? grid.second : 1;
      row.err_exact = kNaN;
      row.err_vs_cn = kNaN;
      row.delta = s.delta;
      row.lambda = lambda;
      row.ratio = s.ratio;
      if (config.timing) row.wall_ms = elapsed_ms(start);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ResultRow> run_topology_sweep(const ExperimentConfig& config) {
  const Setup setup = make_setup(config);
  if (setup.mesh.dim() != 2) throw ConfigError("the topology sweep needs the 2d problem");
  const int ell = config.ells.front();

  std::vector<Decomposition> decs;
  for (auto grid : config.grids) decs.push_back(make_decomposition(setup, grid, ell));

  std::vector<ResultRow> rows;
  for (double tau_request : resolve_taus(config, setup.tau_lf, ell)) {
    const int n = steps_to(setup.final_time, tau_request);
    const double tau = setup.final_time / n;
    const Run cn = run_scheme(setup, config, Scheme::CrankNicolson, nullptr, tau, n);
    for (std::size_t g = 0; g < decs.size(); ++g) {
      const Run ds = run_scheme(setup, config, Scheme::DomainSplitting, &decs[g], tau, n);
      ResultRow row = base_row(config, setup, Scheme::DomainSplitting);
      row.tau = tau;
      row.ell = ell;
      row.nx_sub = config.grids[g].first;
      row.ny_sub = config.grids[g].second;
      row.delta = realized_overlap_width(setup.mesh, decs[g]);
      fill_outcome(row, setup, ds, cn.result.blew_up ? nullptr : &cn.result.final_state);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace dsw
