/**
 * @file harness.hpp
 * @brief Configuration-driven experiments emitting CSV rows.
 *
 * Config files are INI-style:
 *
 *   [experiment]  name, problem (1d|2d), final_time, schemes (list of lf|cn|ds)
 *   [mesh]        cells, perturb, seed (1D); nx, ny (2D)
 *   [time]        tau (list), or tau_min/tau_max/tau_count (geometric),
 *                 or cfl_fraction (list, relative to 2 ell / sqrt(||L_h||))
 *   [splitting]   ell (list), grid (list of NxM)
 *   [solver]      tol, max_iter, blowup_factor
 *   [decay]       lambda_h (list of multiples of h_max)
 *   [output]      path, threads, timing
 *
 * Lists are comma separated.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dsw/integrators.hpp"
#include "dsw/mesh.hpp"
#include "dsw/problems.hpp"

namespace dsw {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name = "run";
  std::string problem = "1d";
  std::optional<double> final_time;  // defaults to the problem's T
  std::vector<Scheme> schemes = {Scheme::CrankNicolson, Scheme::DomainSplitting};

  int cells = 2000;
  double perturb = 0.2;
  std::uint64_t seed = 1;
  int nx = 100;
  int ny = 100;

  std::vector<double> taus;
  double tau_min = 0.0;
  double tau_max = 0.0;
  int tau_count = 0;
  std::vector<double> cfl_fractions;

  std::vector<int> ells = {8};
  std::vector<std::pair<int, int>> grids = {{2, 1}};

  SolverConfig solver;
  double blowup_factor = 1e3;

  std::vector<double> lambda_factors = {1.0, 4.0, 16.0};

  std::string output;
  int threads = 1;
  bool timing = false;  // wall_ms is 0 unless enabled, keeping CSVs reproducible

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct ResultRow {
  std::string experiment;
  std::string scheme;
  double tau = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  int ell = 0;
  int nx_sub = 1;
  int ny_sub = 1;
  double err_exact = 0.0;
  double err_vs_cn = 0.0;
  bool stable = true;
  int steps = 0;
  double wall_ms = 0.0;
  double delta = 0.0;   // realized overlap width
  double lambda = 0.0;  // decay experiment only
  double ratio = 0.0;   // decay experiment only
};

/// Column names in output order.
const std::vector<std::string>& csv_columns();

/// Header plus one line per row; doubles with 17 significant digits, error
/// fields of unstable rows as "inf", not-applicable values as "nan".
void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_csv(const std::vector<ResultRow>& rows, const std::string& path);

/// Builds the configured mesh for the problem dimension.
SimplicialMesh build_mesh(const ExperimentConfig& config);

/// Step sizes for one overlap parameter; tau_lf = 2 / sqrt(||L_h||).
std::vector<double> resolve_taus(const ExperimentConfig& config, double tau_lf, int ell);

/// Each configured scheme at each tau, errors at T. The first ell and grid
/// define the decomposition. With require_exact the problem must provide an
/// exact solution.
std::vector<ResultRow> run_convergence(const ExperimentConfig& config, bool require_exact = true);

/// Largest stable DS step per ell, found by bisection to 1% relative width.
std::vector<ResultRow> run_cfl_scan(const ExperimentConfig& config);

/// Decay of interface data into subdomain 0 for each (lambda, ell).
std::vector<ResultRow> run_decay_experiment(const ExperimentConfig& config);

/// DS against CN at T for every subdomain grid and tau.
std::vector<ResultRow> run_topology_sweep(const ExperimentConfig& config);

struct DecaySample {
  double delta = 0.0;
  double inner_norm = 0.0;  // b-norm of z over the owned region
  double data_norm = 0.0;   // b-norm of the lifted data over the overlapping subdomain
  double ratio = 0.0;
};

/// Solves (M + lambda^2 K) z = 0 on the overlapping subdomain i with z = g on
/// its artificial interface and 0 on the physical boundary. `g` is global
/// indexed; only interface entries are read.
DecaySample decay_sample(const SimplicialMesh& mesh, double kappa, const Decomposition& decomposition, int i,
                         double lambda, std::span<const double> g, const SolverConfig& solver = {});

/// Result of a stability bisection.
struct CflResult {
  double tau_max = 0.0;
  std::vector<double> tried;
  std::vector<bool> stable;
};

using StabilityProbe = std::function<bool(double tau)>;

/// Bisection for the largest stable tau, starting from `start`. Guarantees a
/// stable probe at tau_max and an unstable one at 1.02 tau_max.
CflResult bisect_stability(const StabilityProbe& probe, double start, double resolution = 0.01);

}  // namespace dsw
