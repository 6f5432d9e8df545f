#include "pairamg/amg.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "pairamg/cycle.hpp"

namespace pairamg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Partition allgather_partition(RankCtx& ctx, index_t local_count) {
    Packet mine;
    mine.ints.push_back(local_count);
    std::vector<Packet> parts = ctx.allgather(std::move(mine));
    std::vector<index_t> counts;
    counts.reserve(parts.size());
    for (const Packet& p : parts) counts.push_back(p.ints[0]);
    return Partition::from_counts(counts);
}

CsrMatrix shift_columns(const CsrMatrix& P, index_t offset, index_t global_ncols) {
    CsrMatrix out = P;
    out.ncols = global_ncols;
    for (auto& c : out.col_idx) c += offset;
    return out;
}

}  // namespace

CsrMatrix build_pairwise_prolongator(const Matching& match, std::span<const real_t> w_local,
                                     index_t coarse_offset, index_t* local_aggregates) {
    const index_t n = static_cast<index_t>(match.mate.size());
    if (static_cast<index_t>(w_local.size()) != n)
        throw Error(ErrorCode::contract_violation,
                    "build_pairwise_prolongator: smooth vector length mismatch");

    // Aggregate ids in order of smallest member.
    std::vector<index_t> agg_of(static_cast<std::size_t>(n), -1);
    index_t naggs = 0;
    for (index_t i = 0; i < n; ++i) {
        if (agg_of[i] >= 0) continue;
        const index_t j = match.mate[i];
        agg_of[i] = naggs;
        if (j != kUnmatched) {
            if (j < 0 || j >= n || match.mate[j] != i || j == i)
                throw Error(ErrorCode::contract_violation,
                            "build_pairwise_prolongator: invalid matching");
            agg_of[j] = naggs;
        }
        ++naggs;
    }
    if (local_aggregates) *local_aggregates = naggs;

    CsrMatrix P(n, coarse_offset + naggs);
    P.col_idx.resize(static_cast<std::size_t>(n));
    P.values.resize(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) {
        P.row_ptr[i + 1] = i + 1;  // exactly one entry per row
        P.col_idx[i] = coarse_offset + agg_of[i];
        const index_t j = match.mate[i];
        if (j == kUnmatched) {
            P.values[i] = w_local[i] == 0.0 ? 1.0 : w_local[i] / std::abs(w_local[i]);
        } else {
            const real_t norm = std::sqrt(w_local[i] * w_local[i] + w_local[j] * w_local[j]);
            P.values[i] = norm == 0.0 ? 1.0 / std::sqrt(2.0) : w_local[i] / norm;
        }
    }
    return P;
}

CsrMatrix compose_prolongators(std::span<const CsrMatrix> blocks) {
    if (blocks.empty())
        throw Error(ErrorCode::contract_violation, "compose_prolongators: empty list");
    CsrMatrix out = blocks[0];
    for (std::size_t k = 1; k < blocks.size(); ++k) out = spgemm_local(out, blocks[k]);
    return out;
}

CsrMatrix transpose_block(const CsrMatrix& P_block, index_t fine_begin, index_t fine_global_n,
                          index_t coarse_extent) {
    CsrMatrix R(coarse_extent, fine_global_n);
    for (const index_t c : P_block.col_idx) {
        if (c < 0 || c >= coarse_extent)
            throw Error(ErrorCode::contract_violation,
                        "transpose_block: column outside the local coarse range");
        ++R.row_ptr[c + 1];
    }
    for (index_t i = 0; i < coarse_extent; ++i) R.row_ptr[i + 1] += R.row_ptr[i];
    R.col_idx.resize(P_block.col_idx.size());
    R.values.resize(P_block.values.size());
    std::vector<index_t> next(R.row_ptr.begin(), R.row_ptr.end() - 1);
    for (index_t i = 0; i < P_block.nrows; ++i) {
        for (index_t t = P_block.row_ptr[i]; t < P_block.row_ptr[i + 1]; ++t) {
            const index_t slot = next[P_block.col_idx[t]]++;
            R.col_idx[slot] = fine_begin + i;
            R.values[slot] = P_block.values[t];
        }
    }
    return R;
}

DistMatrix galerkin_product(RankCtx& ctx, const DistMatrix& A, const CsrMatrix& P_block,
                            const Partition& coarse_part, SpmmTimings* timings,
                            std::int64_t* rc_messages) {
    if (P_block.nrows != A.part.extent(ctx.rank()))
        throw Error(ErrorCode::contract_violation,
                    "galerkin_product: P row block does not match A's owned rows");

    DistMatrix P;
    P.part = A.part;
    P.global_ncols = coarse_part.global_n;
    P.local = P_block;

    // First product communicates the needed P rows.
    DistMatrix C = spmm_dist(ctx, A, P, timings);

    // Second product R*C touches only owned rows of C.
    const auto t0 = Clock::now();
    const CommStats before = ctx.stats();
    const index_t cb = coarse_part.begin(ctx.rank());
    CsrMatrix R = transpose_block(shift_columns(P_block, -cb, coarse_part.extent(ctx.rank())),
                                  A.part.begin(ctx.rank()), A.part.global_n,
                                  coarse_part.extent(ctx.rank()));
    SegmentedCsr view(C.local, A.part.begin(ctx.rank()), A.part.end(ctx.rank()), C.global_ncols);

    DistMatrix out;
    out.part = coarse_part;
    out.global_ncols = coarse_part.global_n;
    out.local = spgemm_local(R, view);
    const CommStats delta = ctx.stats() - before;
    if (rc_messages) *rc_messages += delta.total_messages();
    if (timings) timings->product_seconds += seconds_since(t0);
    return out;
}

Hierarchy setup_hierarchy(RankCtx& ctx, const DistMatrix& A, const DistVector& w0,
                          const SetupConfig& cfg) {
    if (cfg.aggregation_exponent < 1)
        throw Error(ErrorCode::invalid_argument, "setup: aggregation exponent must be >= 1");
    if (cfg.max_levels < 1)
        throw Error(ErrorCode::invalid_argument, "setup: max_levels must be >= 1");
    if (!(A.part == w0.part))
        throw Error(ErrorCode::contract_violation, "setup: smooth vector partition mismatch");

    const auto setup_start = Clock::now();
    Hierarchy h;
    SpmmTimings spmm_times;

    Level finest;
    finest.A = A;
    finest.w = w0;
    h.levels.push_back(std::move(finest));

    std::size_t trace_step = 0;
    while (static_cast<int>(h.levels.size()) < cfg.max_levels &&
           h.levels.back().A.part.global_n > cfg.coarse_size_target) {
        const DistMatrix& A_lvl = h.levels.back().A;
        const int level_index = static_cast<int>(h.levels.size());

        DistMatrix A_pair = A_lvl;
        DistVector w_pair = h.levels.back().w;
        std::vector<CsrMatrix> p_blocks;  // local column indexing, for composition

        for (int step = 0; step < cfg.aggregation_exponent; ++step) {
            if (A_pair.part.global_n <= cfg.coarse_size_target) break;
            const index_t fine_n = A_pair.part.global_n;
            const index_t h_own = A_pair.part.begin(ctx.rank());
            const index_t k_own = A_pair.part.end(ctx.rank());

            // Decoupled matching: local diagonal block only, no communication.
            const auto t_match = Clock::now();
            const CommStats before_match = ctx.stats();
            Matching match;
            if (cfg.replay) {
                if (trace_step >= cfg.replay->steps.size())
                    throw Error(ErrorCode::contract_violation, "setup: matching trace exhausted");
                const auto& global_mate = cfg.replay->steps[trace_step];
                match.mate.resize(static_cast<std::size_t>(k_own - h_own));
                for (index_t i = h_own; i < k_own; ++i) {
                    const index_t mg = global_mate[static_cast<std::size_t>(i)];
                    if (mg == kUnmatched) {
                        match.mate[i - h_own] = kUnmatched;
                    } else if (mg < h_own || mg >= k_own) {
                        throw Error(ErrorCode::contract_violation,
                                    "setup: replayed matching crosses the rank partition");
                    } else {
                        match.mate[i - h_own] = mg - h_own;
                    }
                }
            } else {
                const CsrMatrix block = extract_diagonal_block(A_pair.local, h_own, k_own);
                const WeightedGraph g = build_weights(block, w_pair.local);
                match = suitor_match(g);
            }
            h.stats.matching_messages += (ctx.stats() - before_match).total_messages();
            h.stats.t_matching += seconds_since(t_match);
            ++trace_step;

            if (cfg.record) {
                Packet mine;
                for (index_t i = 0; i < k_own - h_own; ++i)
                    mine.ints.push_back(match.mate[i] == kUnmatched ? kUnmatched
                                                                    : match.mate[i] + h_own);
                std::vector<Packet> parts = ctx.allgather(std::move(mine));
                if (ctx.rank() == 0) {
                    std::vector<index_t> global_mate;
                    global_mate.reserve(static_cast<std::size_t>(fine_n));
                    for (const Packet& p : parts)
                        global_mate.insert(global_mate.end(), p.ints.begin(), p.ints.end());
                    cfg.record->steps.push_back(std::move(global_mate));
                }
            }

            index_t local_aggs = 0;
            CsrMatrix P_local = build_pairwise_prolongator(match, w_pair.local, 0, &local_aggs);
            const Partition coarse_part = allgather_partition(ctx, local_aggs);
            const index_t coarse_n = coarse_part.global_n;
            if (coarse_n == fine_n)
                throw Error(ErrorCode::stagnation,
                            "setup: coarsening stagnated at level " +
                                std::to_string(level_index) + " (empty matching)");
            if (static_cast<real_t>(coarse_n) > 0.9 * static_cast<real_t>(fine_n))
                h.warnings.push_back("level " + std::to_string(level_index) + " pairwise step " +
                                     std::to_string(step) + " shrank only " +
                                     std::to_string(fine_n - coarse_n) + " of " +
                                     std::to_string(fine_n) + " rows");

            // Pairwise Galerkin keeps the loop going: the next matching
            // needs the pairwise-coarse operator.
            const CsrMatrix P_global =
                shift_columns(P_local, coarse_part.begin(ctx.rank()), coarse_n);
            A_pair = galerkin_product(ctx, A_pair, P_global, coarse_part, &spmm_times,
                                      &h.stats.rc_messages);

            // w_next = R w: one entry per fine row makes this a local scatter.
            DistVector w_next = DistVector::zeros(coarse_part, ctx);
            for (index_t i = 0; i < P_local.nrows; ++i)
                w_next.local[P_local.col_idx[i]] += P_local.values[i] * w_pair.local[i];
            w_pair = std::move(w_next);
            p_blocks.push_back(std::move(P_local));
        }
        if (p_blocks.empty()) break;

        // Compose the pairwise prolongators into this level's transfer, then
        // form the level operator. A single pairwise step needs no rework.
        const auto t_compose = Clock::now();
        CsrMatrix P_comp_local = compose_prolongators(p_blocks);
        h.stats.t_spmm += seconds_since(t_compose);
        const Partition coarse_part = A_pair.part;
        const CsrMatrix P_comp =
            shift_columns(P_comp_local, coarse_part.begin(ctx.rank()), coarse_part.global_n);

        DistMatrix A_next = p_blocks.size() == 1
                                ? std::move(A_pair)
                                : galerkin_product(ctx, A_lvl, P_comp, coarse_part, &spmm_times,
                                                   &h.stats.rc_messages);

        Level lvl;
        lvl.A = std::move(A_next);
        lvl.w = std::move(w_pair);
        lvl.P_block = P_comp;
        lvl.R_block =
            transpose_block(shift_columns(P_comp, -coarse_part.begin(ctx.rank()),
                                          coarse_part.extent(ctx.rank())),
                            A_lvl.part.begin(ctx.rank()), A_lvl.part.global_n,
                            coarse_part.extent(ctx.rank()));
        lvl.fine_part = A_lvl.part;
        h.levels.push_back(std::move(lvl));
    }

    // Smoother data and reusable SpMV plans for every level.
    for (Level& lvl : h.levels) {
        lvl.m_l1 = l1_diagonal_dist(ctx, lvl.A);
        lvl.spmv_plan = std::make_shared<HaloPlan>(build_spmv_plan(ctx, lvl.A, lvl.A.part));
        h.level_sizes.push_back(lvl.A.part.global_n);
        h.level_nnz.push_back(lvl.A.global_nnz(ctx));
    }
    real_t opc = 0.0;
    for (const index_t nnz : h.level_nnz)
        opc += static_cast<real_t>(nnz) / static_cast<real_t>(h.level_nnz[0]);
    h.opc = opc;

    h.stats.t_spmm += spmm_times.product_seconds;
    h.stats.t_spmm_comm += spmm_times.exchange_seconds;
    h.stats.t_total = seconds_since(setup_start);
    return h;
}

std::string hierarchy_summary(const Hierarchy& h) {
    std::ostringstream os;
    os << "level        rows          nnz\n";
    for (std::size_t k = 0; k < h.level_sizes.size(); ++k) {
        os.width(5);
        os << k + 1;
        os.width(13);
        os << h.level_sizes[k];
        os.width(13);
        os << h.level_nnz[k];
        os << "\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", h.opc);
    os << "levels " << h.levels.size() << ", operator complexity " << buf << "\n";
    return os.str();
}

}  // namespace pairamg
