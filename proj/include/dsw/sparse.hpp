/**
 * @file sparse.hpp
 * @brief Row-compressed sparse matrices and a Jacobi-preconditioned CG solver.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsw {

using Vector = std::vector<double>;

struct Triplet {
  int row;
  int col;
  double value;
};

class SparseMatrix {
public:
  SparseMatrix() = default;

  /// Sums duplicate entries; column indices end up sorted within each row.
  static SparseMatrix from_triplets(std::size_t n, std::span<const Triplet> entries);
  static SparseMatrix identity(std::size_t n);

  std::size_t size() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t nonzeros() const { return values_.size(); }

  std::span<const int> row_columns(std::size_t i) const {
    return {columns_.data() + row_offsets_[i], row_length(i)};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_offsets_[i], row_length(i)};
  }
  double diagonal(std::size_t i) const;
  /// Value at (i, j), zero when the entry is not stored.
  double at(std::size_t i, std::size_t j) const;

  /// Row i times x, summed left to right over the stored columns.
  double row_dot(std::size_t i, std::span<const double> x) const {
    const int* col = columns_.data() + row_offsets_[i];
    const double* val = values_.data() + row_offsets_[i];
    double sum = 0.0;
    for (std::size_t k = 0, n = row_length(i); k < n; ++k) sum += val[k] * x[col[k]];
    return sum;
  }

  bool is_symmetric(double tol = 1e-13) const;

  /// alpha*A + beta*B for matrices over the same index set.
  friend SparseMatrix combine(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b);

  /// Copy in which every row and column listed in `fixed` is replaced by the
  /// identity row/column.
  SparseMatrix with_identity_rows(std::span<const std::uint8_t> fixed) const;

private:
  std::size_t row_length(std::size_t i) const {
    return static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i]);
  }

  std::vector<int> row_offsets_;
  std::vector<int> columns_;
  std::vector<double> values_;
};

/// y = A x
Vector spmv(const SparseMatrix& a, std::span<const double> x);
void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y);

struct SolverConfig {
  double tol = 1e-12;  // relative residual ||Ax - b|| / ||b||
  int max_iter = 10000;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Thrown when CG exhausts its iteration budget. Carries the best iterate.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, Vector best_iterate, double residual)
      : std::runtime_error(what), best_iterate_(std::move(best_iterate)), residual_(residual) {}
  const Vector& best_iterate() const { return best_iterate_; }
  double residual() const { return residual_; }

private:
  Vector best_iterate_;
  double residual_;
};

/// Jacobi-preconditioned conjugate gradients. `x` holds the initial guess on
/// entry and the solution on exit.
SolveStats cg_solve(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                    const SolverConfig& config = {});
Vector cg_solve(const SparseMatrix& a, std::span<const double> b, const SolverConfig& config = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace dsw
