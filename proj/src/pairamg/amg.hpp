#pragma once

#include <string>

#include "pairamg/dist.hpp"
#include "pairamg/matching.hpp"

namespace pairamg {

/// Recorded pairwise matchings (global indices, one array per pairwise
/// step). Lets a test replay one run's aggregation under a different rank
/// count.
struct MatchingTrace {
    std::vector<std::vector<index_t>> steps;
};

struct SetupConfig {
    int aggregation_exponent = 3;  // s: compose this many pairwise steps per level
    index_t coarse_size_target = 40;
    int max_levels = 40;
    const MatchingTrace* replay = nullptr;
    MatchingTrace* record = nullptr;
};

/// One hierarchy level. levels[0] is the input system and carries no
/// transfer operators.
struct Level {
    DistMatrix A;
    DistVector m_l1;   // l1-Jacobi diagonal of A
    DistVector w;      // smooth vector at this level
    std::shared_ptr<const HaloPlan> spmv_plan;

    // Transfer from the finer level; block-diagonal w.r.t. the rank
    // partition, so both applications are purely local.
    CsrMatrix P_block;   // finer local rows x global coarse columns
    CsrMatrix R_block;   // local coarse rows x global finer columns
    Partition fine_part;
};

struct SetupStats {
    double t_total = 0.0;
    double t_matching = 0.0;
    double t_spmm = 0.0;       // local products inside distributed SpMM and composition
    double t_spmm_comm = 0.0;  // exchange portion of distributed SpMM
    std::int64_t matching_messages = 0;  // transport activity during matching (contract: 0)
    std::int64_t rc_messages = 0;        // transport activity during R*C products (contract: 0)
};

struct Hierarchy {
    std::vector<Level> levels;
    std::vector<index_t> level_sizes;  // global rows per level
    std::vector<index_t> level_nnz;    // global nnz per level
    real_t opc = 1.0;
    SetupStats stats;
    std::vector<std::string> warnings;

    int nl() const { return static_cast<int>(levels.size()); }
};

/// Pairwise prolongator from a local matching. Aggregates are enumerated by
/// their smallest member; columns are coarse_offset + aggregate id. Matched
/// pair (i, j) gets column (w_i, w_j)/sqrt(w_i^2 + w_j^2); an unmatched i
/// gets w_i/|w_i|, or 1 when w_i == 0. Every column has unit norm.
CsrMatrix build_pairwise_prolongator(const Matching& match, std::span<const real_t> w_local,
                                     index_t coarse_offset, index_t* local_aggregates);

/// Chain product of consecutive local prolongator blocks (local column
/// indexing); all products are local SpGEMM calls.
CsrMatrix compose_prolongators(std::span<const CsrMatrix> blocks);

/// Transpose of a block prolongator: local coarse rows over global fine
/// columns.
CsrMatrix transpose_block(const CsrMatrix& P_block, index_t fine_begin, index_t fine_global_n,
                          index_t coarse_extent);

/// Coarse operator R*(A*P) with R the transpose of the local P block. The
/// first product is a distributed SpMM; the second is communication-free.
DistMatrix galerkin_product(RankCtx& ctx, const DistMatrix& A, const CsrMatrix& P_block,
                            const Partition& coarse_part, SpmmTimings* timings = nullptr,
                            std::int64_t* rc_messages = nullptr);

/// Builds the full AMG hierarchy by decoupled pairwise matching, level
/// composition every `aggregation_exponent` steps, and Galerkin products.
Hierarchy setup_hierarchy(RankCtx& ctx, const DistMatrix& A, const DistVector& w0,
                          const SetupConfig& cfg);

/// Per-level size/nnz table plus the final operator complexity.
std::string hierarchy_summary(const Hierarchy& h);

}  // namespace pairamg
