// Shared helpers for the unit tests: dense copies for Eigen oracles and
// reproducible random states.
#pragma once

#include <random>

#include <Eigen/Dense>

#include "dsw/fem.hpp"
#include "dsw/sparse.hpp"

namespace dsw::testing {

inline Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto cols = a.row_columns(i);
    auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) d(i, cols[k]) += vals[k];
  }
  return d;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

/// Random vector vanishing on masked nodes.
inline Vector random_free_vector(const DiscreteOperators& ops, std::mt19937_64& rng, double scale = 1.0) {
  Vector v = random_vector(ops.size(), rng, scale);
  for (std::size_t j = 0; j < v.size(); ++j)
    if (ops.dirichlet_mask[j]) v[j] = 0.0;
  return v;
}

inline State random_state(const DiscreteOperators& ops, std::mt19937_64& rng) {
  Vector q = random_free_vector(ops, rng);
  Vector p = random_free_vector(ops, rng);
  return State(std::move(q), std::move(p), 0.0);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Dense L_h restricted to the unmasked nodes, with the index list.
inline Eigen::MatrixXd dense_Lh(const DiscreteOperators& ops, std::vector<int>& free) {
  free.clear();
  for (std::size_t j = 0; j < ops.size(); ++j)
    if (!ops.dirichlet_mask[j]) free.push_back(static_cast<int>(j));
  const Eigen::MatrixXd k = dense(ops.stiffness);
  Eigen::MatrixXd l(free.size(), free.size());
  for (std::size_t a = 0; a < free.size(); ++a)
    for (std::size_t b = 0; b < free.size(); ++b) l(a, b) = k(free[a], free[b]) / ops.lumped_mass[free[a]];
  return l;
}

}  // namespace dsw::testing
