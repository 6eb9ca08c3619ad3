#include "dsw/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dsw {

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::span<const Triplet> entries) {
  std::vector<Triplet> sorted(entries.begin(), entries.end());
  for (const Triplet& t : sorted) {
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n ||
        static_cast<std::size_t>(t.col) >= n)
      throw std::out_of_range("triplet index outside the matrix");
  }
  // stable: duplicates are summed in insertion order
  std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix m;
  m.row_offsets_.assign(n + 1, 0);
  for (std::size_t k = 0; k < sorted.size();) {
    std::size_t next = k;
    double sum = 0.0;
    while (next < sorted.size() && sorted[next].row == sorted[k].row && sorted[next].col == sorted[k].col)
      sum += sorted[next++].value;
    m.columns_.push_back(sorted[k].col);
    m.values_.push_back(sum);
    ++m.row_offsets_[sorted[k].row + 1];
    k = next;
  }
  std::partial_sum(m.row_offsets_.begin(), m.row_offsets_.end(), m.row_offsets_.begin());
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = {static_cast<int>(i), static_cast<int>(i), 1.0};
  return from_triplets(n, diag);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  auto cols = row_columns(i);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<int>(j));
  if (it == cols.end() || *it != static_cast<int>(j)) return 0.0;
  return row_values(i)[it - cols.begin()];
}

double SparseMatrix::diagonal(std::size_t i) const { return at(i, i); }

bool SparseMatrix::is_symmetric(double tol) const {
  for (std::size_t i = 0; i < size(); ++i) {
    auto cols = row_columns(i);
    auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      double mirror = at(cols[k], i);
      double scale = std::max({std::abs(vals[k]), std::abs(mirror), 1e-300});
      if (std::abs(vals[k] - mirror) > tol * scale) return false;
    }
  }
  return true;
}

SparseMatrix combine(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("combine: dimension mismatch");
  std::vector<Triplet> entries;
  entries.reserve(a.nonzeros() + b.nonzeros());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ca = a.row_columns(i);
    auto va = a.row_values(i);
    for (std::size_t k = 0; k < ca.size(); ++k) entries.push_back({static_cast<int>(i), ca[k], alpha * va[k]});
    auto cb = b.row_columns(i);
    auto vb = b.row_values(i);
    for (std::size_t k = 0; k < cb.size(); ++k) entries.push_back({static_cast<int>(i), cb[k], beta * vb[k]});
  }
  return SparseMatrix::from_triplets(a.size(), entries);
}

SparseMatrix SparseMatrix::with_identity_rows(std::span<const std::uint8_t> fixed) const {
  if (fixed.size() != size()) throw std::invalid_argument("with_identity_rows: mask size mismatch");
  std::vector<Triplet> entries;
  entries.reserve(nonzeros());
  for (std::size_t i = 0; i < size(); ++i) {
    if (fixed[i]) {
      entries.push_back({static_cast<int>(i), static_cast<int>(i), 1.0});
      continue;
    }
    auto cols = row_columns(i);
    auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (!fixed[cols[k]]) entries.push_back({static_cast<int>(i), cols[k], vals[k]});
  }
  return from_triplets(size(), entries);
}

void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.size() || y.size() != a.size()) throw std::invalid_argument("spmv: dimension mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a.row_dot(i, x);
}

Vector spmv(const SparseMatrix& a, std::span<const double> x) {
  Vector y(a.size());
  spmv(a, x, y);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SolveStats cg_solve(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                    const SolverConfig& config) {
  const std::size_t n = a.size();
  if (b.size() != n || x.size() != n) throw std::invalid_argument("cg_solve: dimension mismatch");
  if (!(config.tol > 0.0)) throw std::invalid_argument("cg_solve: tolerance must be positive");

  const double b_norm = norm2(b);
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }
  const double target = config.tol * b_norm;

  Vector inv_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = a.diagonal(i);
    inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
  }

  Vector r(n), z(n), p(n), ap(n);
  auto true_residual = [&] {
    spmv(a, x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return norm2(r);
  };

  SolveStats stats;
  double res = true_residual();
  int it = 0;
  while (it < config.max_iter) {
    if (res <= target) {
      stats.iterations = it;
      stats.relative_residual = res / b_norm;
      return stats;
    }
    // (re)start from the true residual
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    bool breakdown = false;
    while (it < config.max_iter) {
      spmv(a, p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0) || !std::isfinite(pap)) {
        breakdown = true;
        break;
      }
      const double alpha = rz / pap;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      ++it;
      if (norm2(r) <= target) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    const double previous = res;
    res = true_residual();
    if (breakdown || !std::isfinite(res)) {
      throw SolverError("cg_solve: breakdown (matrix not SPD on the solved index set)",
                        Vector(x.begin(), x.end()), res / b_norm);
    }
    if (res > target && res >= previous) {
      throw SolverError("cg_solve: residual stagnated at " + std::to_string(res / b_norm),
                        Vector(x.begin(), x.end()), res / b_norm);
    }
  }
  if (res <= target) {
    stats.iterations = it;
    stats.relative_residual = res / b_norm;
    return stats;
  }
  throw SolverError("cg_solve: no convergence after " + std::to_string(it) + " iterations",
                    Vector(x.begin(), x.end()), res / b_norm);
}

Vector cg_solve(const SparseMatrix& a, std::span<const double> b, const SolverConfig& config) {
  Vector x(b.size(), 0.0);
  cg_solve(a, b, x, config);
  return x;
}

}  // namespace dsw
