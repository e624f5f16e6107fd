#pragma once

// Sweeps over the observed entries of a sparse mask. Every kernel has a
// serial reference (kept for tests and benchmarks) and an OpenMP version.
//
// The parallel versions are deterministic regardless of the thread count:
// products gather per output row (so each row is summed in entry order) and
// reductions use fixed-size chunks combined sequentially.

#include <cstdint>
#include <span>
#include <vector>

#include "desing/types.hpp"

namespace desing {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Observed index set, sorted row-major without duplicates. Also carries a
/// column-blocked ordering for transposed products: entries grouped by
/// blocks of kColumnBlock columns, row-major inside each block.
class SparseMask {
 public:
  static constexpr Index kColumnBlock = 64;

  SparseMask() = default;
  /// Sorts and validates the pairs. Throws InvalidArgument on out-of-range
  /// indices or duplicates.
  SparseMask(Index m, Index n, std::vector<std::int64_t> rows,
             std::vector<std::int64_t> cols);

  Index rows() const { return m_; }
  Index cols() const { return n_; }
  Index nnz() const { return static_cast<Index>(row_idx_.size()); }

  std::span<const std::int64_t> row_indices() const { return row_idx_; }
  std::span<const std::int64_t> col_indices() const { return col_idx_; }
  /// Entries of row i are [row_ptr[i], row_ptr[i+1]).
  std::span<const Index> row_ptr() const { return row_ptr_; }
  /// Entries of column block b are block_perm[block_ptr[b] .. block_ptr[b+1]).
  std::span<const Index> block_ptr() const { return block_ptr_; }
  std::span<const Index> block_perm() const { return block_perm_; }
  /// Row and column index of each entry in block order.
  std::span<const std::int64_t> block_rows() const { return block_rows_; }
  std::span<const std::int64_t> block_cols() const { return block_cols_; }

 private:
  Index m_ = 0;
  Index n_ = 0;
  std::vector<std::int64_t> row_idx_;
  std::vector<std::int64_t> col_idx_;
  std::vector<Index> row_ptr_;
  std::vector<Index> block_ptr_;
  std::vector<Index> block_perm_;
  std::vector<std::int64_t> block_rows_;
  std::vector<std::int64_t> block_cols_;
};

namespace kernels {

inline constexpr Index kReductionChunk = 4096;

namespace serial {
/// x_e = left.row(i_e) . right.row(j_e)
Vector masked_entries(const SparseMask& mask, const RowMatrix& left,
                      const RowMatrix& right);
/// 1/2 sum v_e^2
double half_sum_squares(const Vector& v);
/// (sum_e v_e E_{i_e j_e}) * a, with a having n rows. Result m x k.
Matrix sparse_times(const SparseMask& mask, const Vector& vals, const RowMatrix& a);
/// (sum_e v_e E_{i_e j_e})^T * b, with b having m rows. Result n x k.
Matrix sparse_t_times(const SparseMask& mask, const Vector& vals, const RowMatrix& b);
}  // namespace serial

namespace parallel {
Vector masked_entries(const SparseMask& mask, const RowMatrix& left,
                      const RowMatrix& right);
double half_sum_squares(const Vector& v);
Matrix sparse_times(const SparseMask& mask, const Vector& vals, const RowMatrix& a);
Matrix sparse_t_times(const SparseMask& mask, const Vector& vals, const RowMatrix& b);
}  // namespace parallel

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads();

}  // namespace kernels
}  // namespace desing
