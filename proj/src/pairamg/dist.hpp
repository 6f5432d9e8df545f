#pragma once

#include <memory>

#include "pairamg/csr.hpp"
#include "pairamg/runtime.hpp"

namespace pairamg {

struct HaloPlan;

/// Row-block distributed matrix: this rank's consecutive rows in local CSR
/// with global column indices.
struct DistMatrix {
    Partition part;          // row ownership
    index_t global_ncols = 0;
    CsrMatrix local;
    std::shared_ptr<const HaloPlan> cached_plan;  // lazily built SpMV plan

    index_t owned_begin(const RankCtx& ctx) const { return part.begin(ctx.rank()); }
    index_t owned_end(const RankCtx& ctx) const { return part.end(ctx.rank()); }
    index_t global_nnz(RankCtx& ctx) const;
};

struct DistVector {
    Partition part;
    std::vector<real_t> local;

    static DistVector zeros(const Partition& part, const RankCtx& ctx) {
        return {part, std::vector<real_t>(static_cast<std::size_t>(part.extent(ctx.rank())), 0.0)};
    }
    static DistVector constant(const Partition& part, const RankCtx& ctx, real_t v) {
        return {part, std::vector<real_t>(static_cast<std::size_t>(part.extent(ctx.rank())), v)};
    }
};

/// Matrix content fingerprint used to invalidate stale plans.
struct MatrixFingerprint {
    index_t nrows = 0;
    index_t nnz = 0;
    std::uint64_t row_ptr_checksum = 0;

    static MatrixFingerprint of(const CsrMatrix& A);
    bool operator==(const MatrixFingerprint&) const = default;
};

/// Exchange plan for one distributed operand: which global ids this rank
/// receives (vector elements for SpMV, matrix rows for SpMM) and which owned
/// ids it sends to each peer. A pure function of sparsity and partition.
struct HaloPlan {
    Partition col_part;                       // ownership of the exchanged ids
    std::vector<index_t> recv_ids;            // sorted, disjoint from owned range
    std::vector<index_t> recv_counts;         // per source rank, sums to recv_ids size
    std::vector<std::vector<index_t>> send_ids;  // per destination rank, each within owned range
    std::vector<index_t> row_nnz;             // per recv row (SpMM only)
    std::vector<index_t> boundary_rows;       // local rows with at least one remote column
    MatrixFingerprint fingerprint;

    bool has_traffic() const { return !recv_ids.empty() || !send_all_empty(); }
    bool send_all_empty() const {
        for (const auto& s : send_ids)
            if (!s.empty()) return false;
        return true;
    }
};

/// Global column indices of A_local outside the owned range of `part`,
/// deduplicated and sorted.
std::vector<index_t> build_rows_to_receive(const CsrMatrix& A_local, const Partition& part,
                                           int rank);

/// Builds the reusable SpMV exchange plan for A against the column
/// partition `col_part` (the ownership of x).
HaloPlan build_spmv_plan(RankCtx& ctx, const DistMatrix& A, const Partition& col_part);

/// Returns A's cached plan, building and caching it on first use.
const HaloPlan& ensure_spmv_plan(RankCtx& ctx, DistMatrix& A);

/// y = A x over the row blocks. Rows whose columns are all owned are
/// computed while the halo exchange is in flight when `overlap` is set; each
/// row is summed in ascending column order either way, so the result is
/// bitwise identical across overlap modes and rank counts.
DistVector spmv_dist(RankCtx& ctx, const DistMatrix& A, const DistVector& x,
                     const HaloPlan& plan, bool overlap = true);
void spmv_dist(RankCtx& ctx, const DistMatrix& A, const DistVector& x, const HaloPlan& plan,
               bool overlap, DistVector& y);

/// Timings reported by spmm_dist for the setup-phase breakdown.
struct SpmmTimings {
    double exchange_seconds = 0.0;
    double product_seconds = 0.0;
};

/// C = A·B via whole-exchange-then-one-product: harvest the non-owned B rows
/// referenced by A's columns, merge them into a segmented view, then call the
/// local SpGEMM once.
DistMatrix spmm_dist(RankCtx& ctx, const DistMatrix& A, const DistMatrix& B,
                     SpmmTimings* timings = nullptr);

real_t dot_dist(RankCtx& ctx, const DistVector& x, const DistVector& y);
real_t norm2_dist(RankCtx& ctx, const DistVector& x);

/// y = alpha * x + y, purely local.
void axpy_local(real_t alpha, const DistVector& x, DistVector& y);

// Test and reporting helpers: replicate a distributed object on every rank.
CsrMatrix gather_matrix(RankCtx& ctx, const DistMatrix& A);
std::vector<real_t> gather_vector(RankCtx& ctx, const DistVector& x);

/// Slice the owned row block out of a replicated global matrix.
DistMatrix distribute_matrix(const RankCtx& ctx, const CsrMatrix& A, const Partition& part);

}  // namespace pairamg
