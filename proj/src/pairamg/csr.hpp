#pragma once

#include <span>
#include <vector>

#include "pairamg/types.hpp"

namespace pairamg {

/// Sparse matrix in compressed sparse row form. Column indices are global
/// and strictly increasing within each row; no duplicate (row, col) pairs.
struct CsrMatrix {
    index_t nrows = 0;
    index_t ncols = 0;
    std::vector<index_t> row_ptr;  // length nrows + 1, row_ptr[0] == 0
    std::vector<index_t> col_idx;
    std::vector<real_t> values;

    CsrMatrix() : row_ptr(1, 0) {}
    CsrMatrix(index_t rows, index_t cols) : nrows(rows), ncols(cols), row_ptr(rows + 1, 0) {}

    index_t nnz() const { return row_ptr.empty() ? 0 : row_ptr[nrows]; }

    std::span<const index_t> row_cols(index_t i) const {
        return {col_idx.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
    }
    std::span<const real_t> row_vals(index_t i) const {
        return {values.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
    }

    static CsrMatrix identity(index_t n);

    /// Build from unsorted triplets; sorts rows, rejects duplicates.
    static CsrMatrix from_triplets(index_t nrows, index_t ncols,
                                   std::span<const index_t> rows,
                                   std::span<const index_t> cols,
                                   std::span<const real_t> vals);

    /// Checks the CSR invariants, throws contract_violation on failure.
    void validate() const;
};

/// Local CSR block (rows [owned_begin, owned_end) of a global matrix) plus an
/// auxiliary CSR of harvested non-local rows. Row lookup routes through the
/// owned-range check so product kernels see a single global row space.
struct SegmentedCsr {
    const CsrMatrix* local = nullptr;
    index_t owned_begin = 0;
    index_t owned_end = 0;  // exclusive
    index_t ncols = 0;      // global column dimension of the viewed matrix
    const CsrMatrix* aux = nullptr;               // may be null when no harvested rows
    std::span<const index_t> aux_row_map;         // sorted global ids of aux rows

    /// View over a fully local matrix: global rows == local rows.
    explicit SegmentedCsr(const CsrMatrix& m)
        : local(&m), owned_begin(0), owned_end(m.nrows), ncols(m.ncols) {}

    /// View over an owned row block (global rows [begin, end)) without
    /// harvested rows.
    SegmentedCsr(const CsrMatrix& local_block, index_t begin, index_t end, index_t global_ncols)
        : local(&local_block), owned_begin(begin), owned_end(end), ncols(global_ncols) {}

    SegmentedCsr(const CsrMatrix& local_block, index_t begin, index_t end, index_t global_ncols,
                 const CsrMatrix& aux_block, std::span<const index_t> row_map)
        : local(&local_block), owned_begin(begin), owned_end(end), ncols(global_ncols),
          aux(&aux_block), aux_row_map(row_map) {}

    struct RowView {
        std::span<const index_t> cols;
        std::span<const real_t> vals;
    };

    /// Resolves a global row index; throws missing_row when the row is
    /// neither owned nor harvested.
    RowView row(index_t global_row) const;

    /// Number of global rows addressable (the fine dimension the view spans).
    index_t global_rows() const;
};

/// y = A x, or y += A x when accumulate is set.
void spmv_local(const CsrMatrix& A, std::span<const real_t> x, std::span<real_t> y,
                bool accumulate = false);
std::vector<real_t> spmv_local(const CsrMatrix& A, std::span<const real_t> x);

struct SpgemmOptions {
    /// Rows whose accumulated-contribution bound exceeds this many slots take
    /// the sort-merge path instead of the hash accumulator.
    index_t hash_capacity = 4096;
};

/// C = A * B with exact two-phase (symbolic then numeric) execution.
/// Column indices of A are resolved as global row ids of the view.
CsrMatrix spgemm_local(const CsrMatrix& A, const SegmentedCsr& B_view,
                       const SpgemmOptions& opts = {});
CsrMatrix spgemm_local(const CsrMatrix& A, const CsrMatrix& B,
                       const SpgemmOptions& opts = {});

CsrMatrix transpose(const CsrMatrix& A);

/// d_i = a_ii + sum_{j != i} |a_ij|. Throws singular_smoother when some d_i == 0.
std::vector<real_t> l1_diagonal(const CsrMatrix& A);

}  // namespace pairamg
