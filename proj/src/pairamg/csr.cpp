#include "pairamg/csr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pairamg {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace

CsrMatrix CsrMatrix::identity(index_t n) {
    CsrMatrix I(n, n);
    I.col_idx.resize(n);
    I.values.assign(n, 1.0);
    std::iota(I.col_idx.begin(), I.col_idx.end(), index_t{0});
    std::iota(I.row_ptr.begin(), I.row_ptr.end(), index_t{0});
    return I;
}

CsrMatrix CsrMatrix::from_triplets(index_t nrows, index_t ncols,
                                   std::span<const index_t> rows,
                                   std::span<const index_t> cols,
                                   std::span<const real_t> vals) {
    if (rows.size() != cols.size() || rows.size() != vals.size())
        fail(ErrorCode::contract_violation, "from_triplets: mismatched triplet array lengths");
    const std::size_t nnz = rows.size();
    std::vector<std::size_t> order(nnz);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b];
    });

    CsrMatrix A(nrows, ncols);
    A.col_idx.resize(nnz);
    A.values.resize(nnz);
    for (std::size_t t = 0; t < nnz; ++t) {
        const std::size_t s = order[t];
        if (rows[s] < 0 || rows[s] >= nrows || cols[s] < 0 || cols[s] >= ncols)
            fail(ErrorCode::contract_violation, "from_triplets: entry out of bounds");
        if (t > 0 && rows[order[t - 1]] == rows[s] && cols[order[t - 1]] == cols[s])
            fail(ErrorCode::contract_violation,
                 "from_triplets: duplicate entry at (" + std::to_string(rows[s]) + ", " +
                     std::to_string(cols[s]) + ")");
        A.col_idx[t] = cols[s];
        A.values[t] = vals[s];
        ++A.row_ptr[rows[s] + 1];
    }
    std::partial_sum(A.row_ptr.begin(), A.row_ptr.end(), A.row_ptr.begin());
    return A;
}

void CsrMatrix::validate() const {
    if (nrows < 0 || ncols < 0) fail(ErrorCode::contract_violation, "csr: negative dimension");
    if (static_cast<index_t>(row_ptr.size()) != nrows + 1)
        fail(ErrorCode::contract_violation, "csr: row_ptr length != nrows + 1");
    if (row_ptr[0] != 0) fail(ErrorCode::contract_violation, "csr: row_ptr[0] != 0");
    if (col_idx.size() != values.size())
        fail(ErrorCode::contract_violation, "csr: col_idx/values length mismatch");
    if (row_ptr[nrows] != static_cast<index_t>(col_idx.size()))
        fail(ErrorCode::contract_violation, "csr: row_ptr[nrows] != nnz");
    for (index_t i = 0; i < nrows; ++i) {
        if (row_ptr[i] > row_ptr[i + 1])
            fail(ErrorCode::contract_violation, "csr: row_ptr not non-decreasing");
        for (index_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            if (col_idx[k] < 0 || col_idx[k] >= ncols)
                fail(ErrorCode::contract_violation,
                     "csr: column " + std::to_string(col_idx[k]) + " out of range in row " +
                         std::to_string(i));
            if (k > row_ptr[i] && col_idx[k - 1] >= col_idx[k])
                fail(ErrorCode::contract_violation,
                     "csr: columns not strictly increasing in row " + std::to_string(i));
        }
    }
}

SegmentedCsr::RowView SegmentedCsr::row(index_t global_row) const {
    if (global_row >= owned_begin && global_row < owned_end) {
        const index_t li = global_row - owned_begin;
        return {local->row_cols(li), local->row_vals(li)};
    }
    const auto it = std::lower_bound(aux_row_map.begin(), aux_row_map.end(), global_row);
    if (aux == nullptr || it == aux_row_map.end() || *it != global_row)
        fail(ErrorCode::missing_row,
             "segmented csr: global row " + std::to_string(global_row) +
                 " is neither owned nor harvested");
    const index_t slot = static_cast<index_t>(it - aux_row_map.begin());
    return {aux->row_cols(slot), aux->row_vals(slot)};
}

index_t SegmentedCsr::global_rows() const {
    index_t n = owned_end;
    if (!aux_row_map.empty()) n = std::max(n, aux_row_map.back() + 1);
    return n;
}

void spmv_local(const CsrMatrix& A, std::span<const real_t> x, std::span<real_t> y,
                bool accumulate) {
    if (static_cast<index_t>(x.size()) != A.ncols)
        fail(ErrorCode::contract_violation,
             "spmv_local: x length " + std::to_string(x.size()) + " != ncols " +
                 std::to_string(A.ncols));
    if (static_cast<index_t>(y.size()) != A.nrows)
        fail(ErrorCode::contract_violation, "spmv_local: y length != nrows");
    for (index_t i = 0; i < A.nrows; ++i) {
        real_t sum = 0.0;
        for (index_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            sum += A.values[k] * x[A.col_idx[k]];
        if (accumulate)
            y[i] += sum;
        else
            y[i] = sum;
    }
}

std::vector<real_t> spmv_local(const CsrMatrix& A, std::span<const real_t> x) {
    std::vector<real_t> y(A.nrows, 0.0);
    spmv_local(A, x, y, false);
    return y;
}

namespace {

// Open-addressing accumulator keyed by column index. Contributions to one
// column are summed in encounter order, which the callers keep ascending in
// the inner operand row index so results do not depend on the path taken.
class HashAccumulator {
public:
    void reset(index_t capacity_hint) {
        std::size_t cap = 16;
        while (cap < static_cast<std::size_t>(2 * capacity_hint)) cap <<= 1;
        if (keys_.size() < cap) {
            keys_.assign(cap, kEmpty);
            vals_.resize(cap);
        } else {
            for (const index_t slot : used_) keys_[slot] = kEmpty;
        }
        mask_ = cap - 1;
        used_.clear();
    }

    void add(index_t col, real_t v) {
        std::size_t h = static_cast<std::size_t>(col) * 0x9E3779B97F4A7C15ull & mask_;
        while (true) {
            if (keys_[h] == col) {
                vals_[h] += v;
                return;
            }
            if (keys_[h] == kEmpty) {
                keys_[h] = col;
                vals_[h] = v;
                used_.push_back(static_cast<index_t>(h));
                return;
            }
            h = (h + 1) & mask_;
        }
    }

    index_t count() const { return static_cast<index_t>(used_.size()); }

    void extract_sorted(std::vector<index_t>& cols, std::vector<real_t>& vals) {
        sorted_.assign(used_.begin(), used_.end());
        std::sort(sorted_.begin(), sorted_.end(),
                  [this](index_t a, index_t b) { return keys_[a] < keys_[b]; });
        for (const index_t slot : sorted_) {
            cols.push_back(keys_[slot]);
            vals.push_back(vals_[slot]);
        }
    }

private:
    static constexpr index_t kEmpty = -1;
    std::vector<index_t> keys_;
    std::vector<real_t> vals_;
    std::vector<index_t> used_;
    std::vector<index_t> sorted_;
    std::size_t mask_ = 0;
};

// Sort-merge path for heavy rows: contributions are collected in encounter
// order and stably sorted by column, so per-column summation order matches
// the hash path exactly.
void merge_row(std::vector<std::pair<index_t, real_t>>& contrib,
               std::vector<index_t>& cols, std::vector<real_t>& vals) {
    std::stable_sort(contrib.begin(), contrib.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t i = 0;
    while (i < contrib.size()) {
        const index_t c = contrib[i].first;
        real_t sum = contrib[i].second;
        ++i;
        while (i < contrib.size() && contrib[i].first == c) {
            sum += contrib[i].second;
            ++i;
        }
        cols.push_back(c);
        vals.push_back(sum);
    }
}

}  // namespace

CsrMatrix spgemm_local(const CsrMatrix& A, const SegmentedCsr& B_view,
                       const SpgemmOptions& opts) {
    // Per-row contribution bound decides hash vs. sort-merge; the decision
    // depends only on the sparsity, not on the partition.
    std::vector<index_t> bound(A.nrows, 0);
    for (index_t i = 0; i < A.nrows; ++i) {
        index_t ub = 0;
        for (const index_t j : A.row_cols(i)) ub += static_cast<index_t>(B_view.row(j).cols.size());
        bound[i] = ub;
    }

    CsrMatrix C;
    C.nrows = A.nrows;
    C.ncols = B_view.ncols;
    C.row_ptr.assign(A.nrows + 1, 0);

    // Symbolic phase: exact nnz per output row.
    HashAccumulator acc;
    std::vector<std::pair<index_t, real_t>> contrib;
    for (index_t i = 0; i < A.nrows; ++i) {
        const auto cols_a = A.row_cols(i);
        if (bound[i] <= opts.hash_capacity) {
            acc.reset(std::max<index_t>(bound[i], 1));
            for (const index_t j : cols_a)
                for (const index_t c : B_view.row(j).cols) acc.add(c, 0.0);
            C.row_ptr[i + 1] = acc.count();
        } else {
            contrib.clear();
            contrib.reserve(static_cast<std::size_t>(bound[i]));
            for (const index_t j : cols_a)
                for (const index_t c : B_view.row(j).cols) contrib.emplace_back(c, 0.0);
            std::sort(contrib.begin(), contrib.end());
            C.row_ptr[i + 1] = static_cast<index_t>(
                std::unique(contrib.begin(), contrib.end()) - contrib.begin());
        }
    }
    std::partial_sum(C.row_ptr.begin(), C.row_ptr.end(), C.row_ptr.begin());
    C.col_idx.reserve(static_cast<std::size_t>(C.row_ptr[C.nrows]));
    C.values.reserve(static_cast<std::size_t>(C.row_ptr[C.nrows]));

    // Numeric phase.
    for (index_t i = 0; i < A.nrows; ++i) {
        const auto cols_a = A.row_cols(i);
        const auto vals_a = A.row_vals(i);
        if (bound[i] <= opts.hash_capacity) {
            acc.reset(std::max<index_t>(bound[i], 1));
            for (std::size_t k = 0; k < cols_a.size(); ++k) {
                const auto bro = B_view.row(cols_a[k]);
                for (std::size_t t = 0; t < bro.cols.size(); ++t)
                    acc.add(bro.cols[t], vals_a[k] * bro.vals[t]);
            }
            acc.extract_sorted(C.col_idx, C.values);
        } else {
            contrib.clear();
            contrib.reserve(static_cast<std::size_t>(bound[i]));
            for (std::size_t k = 0; k < cols_a.size(); ++k) {
                const auto bro = B_view.row(cols_a[k]);
                for (std::size_t t = 0; t < bro.cols.size(); ++t)
                    contrib.emplace_back(bro.cols[t], vals_a[k] * bro.vals[t]);
            }
            merge_row(contrib, C.col_idx, C.values);
        }
        if (static_cast<index_t>(C.col_idx.size()) != C.row_ptr[i + 1])
            fail(ErrorCode::internal, "spgemm_local: numeric nnz disagrees with symbolic count");
    }
    return C;
}

CsrMatrix spgemm_local(const CsrMatrix& A, const CsrMatrix& B, const SpgemmOptions& opts) {
    if (A.ncols != B.nrows)
        fail(ErrorCode::contract_violation,
             "spgemm_local: A.ncols " + std::to_string(A.ncols) + " != B.nrows " +
                 std::to_string(B.nrows));
    return spgemm_local(A, SegmentedCsr(B), opts);
}

CsrMatrix transpose(const CsrMatrix& A) {
    CsrMatrix T(A.ncols, A.nrows);
    T.col_idx.resize(static_cast<std::size_t>(A.nnz()));
    T.values.resize(static_cast<std::size_t>(A.nnz()));
    for (const index_t c : A.col_idx) ++T.row_ptr[c + 1];
    std::partial_sum(T.row_ptr.begin(), T.row_ptr.end(), T.row_ptr.begin());
    std::vector<index_t> next(T.row_ptr.begin(), T.row_ptr.end() - 1);
    for (index_t i = 0; i < A.nrows; ++i) {
        for (index_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const index_t slot = next[A.col_idx[k]]++;
            T.col_idx[slot] = i;
            T.values[slot] = A.values[k];
        }
    }
    return T;
}

std::vector<real_t> l1_diagonal(const CsrMatrix& A) {
    if (A.nrows != A.ncols)
        fail(ErrorCode::contract_violation, "l1_diagonal: matrix not square");
    std::vector<real_t> d(A.nrows, 0.0);
    for (index_t i = 0; i < A.nrows; ++i) {
        real_t acc = 0.0;
        for (index_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            if (A.col_idx[k] == i)
                acc += A.values[k];
            else
                acc += std::abs(A.values[k]);
        }
        if (acc == 0.0)
            fail(ErrorCode::singular_smoother,
                 "l1_diagonal: zero diagonal weight at row " + std::to_string(i));
        d[i] = acc;
    }
    return d;
}

}  // namespace pairamg
