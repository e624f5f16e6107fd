#include "desing/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace desing {

SparseMask::SparseMask(Index m, Index n, std::vector<std::int64_t> rows,
                       std::vector<std::int64_t> cols)
    : m_(m), n_(n) {
  if (rows.size() != cols.size()) {
    throw InvalidArgument("mask row/column index arrays differ in length");
  }
  const std::size_t nnz = rows.size();
  std::vector<std::size_t> order(nnz);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b];
  });
  row_idx_.resize(nnz);
  col_idx_.resize(nnz);
  for (std::size_t e = 0; e < nnz; ++e) {
    const std::int64_t i = rows[order[e]];
    const std::int64_t j = cols[order[e]];
    if (i < 0 || i >= m || j < 0 || j >= n) {
      std::ostringstream os;
      os << "mask index (" << i << ", " << j << ") out of range";
      throw InvalidArgument(os.str());
    }
    if (e > 0 && i == row_idx_[e - 1] && j == col_idx_[e - 1]) {
      std::ostringstream os;
      os << "duplicate mask index (" << i << ", " << j << ")";
      throw InvalidArgument(os.str());
    }
    row_idx_[e] = i;
    col_idx_[e] = j;
  }

  row_ptr_.assign(static_cast<std::size_t>(m) + 1, 0);
  const Index blocks = (n + kColumnBlock - 1) / kColumnBlock;
  block_ptr_.assign(static_cast<std::size_t>(blocks) + 1, 0);
  for (std::size_t e = 0; e < nnz; ++e) {
    ++row_ptr_[static_cast<std::size_t>(row_idx_[e]) + 1];
    ++block_ptr_[static_cast<std::size_t>(col_idx_[e] / kColumnBlock) + 1];
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  std::partial_sum(block_ptr_.begin(), block_ptr_.end(), block_ptr_.begin());
  // Counting sort by column block; stable, so each block stays row-major.
  block_perm_.resize(nnz);
  block_rows_.resize(nnz);
  block_cols_.resize(nnz);
  std::vector<Index> fill(block_ptr_.begin(), block_ptr_.end() - 1);
  for (std::size_t e = 0; e < nnz; ++e) {
    const auto p = static_cast<std::size_t>(fill[static_cast<std::size_t>(col_idx_[e] / kColumnBlock)]++);
    block_perm_[p] = static_cast<Index>(e);
    block_rows_[p] = row_idx_[e];
    block_cols_[p] = col_idx_[e];
  }
}

namespace kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

Vector masked_entries(const SparseMask& mask, const RowMatrix& left,
                      const RowMatrix& right) {
  const auto ri = mask.row_indices();
  const auto ci = mask.col_indices();
  const Index k = left.cols();
  Vector out(mask.nnz());
  for (Index e = 0; e < mask.nnz(); ++e) {
    const double* l = left.data() + ri[static_cast<std::size_t>(e)] * k;
    const double* r = right.data() + ci[static_cast<std::size_t>(e)] * k;
    double acc = 0.0;
    for (Index c = 0; c < k; ++c) {
      acc += l[c] * r[c];
    }
    out(e) = acc;
  }
  return out;
}

double half_sum_squares(const Vector& v) {
  double acc = 0.0;
  for (Index e = 0; e < v.size(); ++e) {
    acc += v(e) * v(e);
  }
  return 0.5 * acc;
}

Matrix sparse_times(const SparseMask& mask, const Vector& vals, const RowMatrix& a) {
  const auto ri = mask.row_indices();
  const auto ci = mask.col_indices();
  const Index k = a.cols();
  RowMatrix out = RowMatrix::Zero(mask.rows(), k);
  for (Index e = 0; e < mask.nnz(); ++e) {
    const double v = vals(e);
    double* o = out.data() + ri[static_cast<std::size_t>(e)] * k;
    const double* src = a.data() + ci[static_cast<std::size_t>(e)] * k;
    for (Index c = 0; c < k; ++c) {
      o[c] += v * src[c];
    }
  }
  return out;
}

Matrix sparse_t_times(const SparseMask& mask, const Vector& vals, const RowMatrix& b) {
  const auto ri = mask.row_indices();
  const auto ci = mask.col_indices();
  const Index k = b.cols();
  RowMatrix out = RowMatrix::Zero(mask.cols(), k);
  for (Index e = 0; e < mask.nnz(); ++e) {
    const double v = vals(e);
    double* o = out.data() + ci[static_cast<std::size_t>(e)] * k;
    const double* src = b.data() + ri[static_cast<std::size_t>(e)] * k;
    for (Index c = 0; c < k; ++c) {
      o[c] += v * src[c];
    }
  }
  return out;
}

}  // namespace serial

namespace parallel {

Vector masked_entries(const SparseMask& mask, const RowMatrix& left,
                      const RowMatrix& right) {
  const std::int64_t* ri = mask.row_indices().data();
  const std::int64_t* ci = mask.col_indices().data();
  const Index k = left.cols();
  const Index nnz = mask.nnz();
  Vector out(nnz);
  const double* ld = left.data();
  const double* rd = right.data();
  double* od = out.data();
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < nnz; ++e) {
    const double* l = ld + ri[e] * k;
    const double* r = rd + ci[e] * k;
    double acc = 0.0;
    for (Index c = 0; c < k; ++c) {
      acc += l[c] * r[c];
    }
    od[e] = acc;
  }
  return out;
}

double half_sum_squares(const Vector& v) {
  const Index n = v.size();
  const Index chunks = (n + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
  const double* vd = v.data();
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < chunks; ++c) {
    const Index begin = c * kReductionChunk;
    const Index end = std::min(n, begin + kReductionChunk);
    double acc = 0.0;
    for (Index e = begin; e < end; ++e) {
      acc += vd[e] * vd[e];
    }
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) {
    total += p;
  }
  return 0.5 * total;
}

Matrix sparse_times(const SparseMask& mask, const Vector& vals, const RowMatrix& a) {
  const std::int64_t* ci = mask.col_indices().data();
  const Index* rp = mask.row_ptr().data();
  const Index m = mask.rows();
  const Index k = a.cols();
  RowMatrix out = RowMatrix::Zero(m, k);
  const double* ad = a.data();
  const double* vd = vals.data();
  double* od = out.data();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    double* o = od + i * k;
    for (Index e = rp[i]; e < rp[i + 1]; ++e) {
      const double v = vd[e];
      const double* src = ad + ci[e] * k;
      for (Index c = 0; c < k; ++c) {
        o[c] += v * src[c];
      }
    }
  }
  return out;
}

Matrix sparse_t_times(const SparseMask& mask, const Vector& vals, const RowMatrix& b) {
  // Each block owns kColumnBlock output rows; every output row still sums
  // its entries in increasing row order, as the serial version does.
  const std::int64_t* br = mask.block_rows().data();
  const std::int64_t* bc = mask.block_cols().data();
  const Index* bp = mask.block_ptr().data();
  const Index* perm = mask.block_perm().data();
  const Index blocks = static_cast<Index>(mask.block_ptr().size()) - 1;
  const Index k = b.cols();
  RowMatrix out = RowMatrix::Zero(mask.cols(), k);
  const double* bd = b.data();
  const double* vd = vals.data();
  double* od = out.data();
#pragma omp parallel for schedule(static)
  for (Index blk = 0; blk < blocks; ++blk) {
    for (Index p = bp[blk]; p < bp[blk + 1]; ++p) {
      const double v = vd[perm[p]];
      double* o = od + bc[p] * k;
      const double* src = bd + br[p] * k;
      for (Index c = 0; c < k; ++c) {
        o[c] += v * src[c];
      }
    }
  }
  return out;
}

}  // namespace parallel
}  // namespace kernels
}  // namespace desing
