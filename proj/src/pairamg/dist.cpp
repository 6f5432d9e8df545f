#include "pairamg/dist.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace pairamg {

namespace {

constexpr index_t kTagSpmvHalo = 101;
constexpr index_t kTagSpmmRows = 102;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_partition_match(const Partition& a, const Partition& b, const char* what) {
    if (!(a == b))
        throw Error(ErrorCode::contract_violation, std::string(what) + ": partition mismatch");
}

}  // namespace

MatrixFingerprint MatrixFingerprint::of(const CsrMatrix& A) {
    MatrixFingerprint fp;
    fp.nrows = A.nrows;
    fp.nnz = A.nnz();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over row offsets
    for (const index_t v : A.row_ptr) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
    }
    fp.row_ptr_checksum = h;
    return fp;
}

index_t DistMatrix::global_nnz(RankCtx& ctx) const {
    const index_t mine = local.nnz();
    return ctx.allreduce_sum(std::span<const index_t>(&mine, 1))[0];
}

std::vector<index_t> build_rows_to_receive(const CsrMatrix& A_local, const Partition& part,
                                           int rank) {
    const index_t h = part.begin(rank);
    const index_t k = part.end(rank);
    std::vector<index_t> out;
    for (const index_t j : A_local.col_idx)
        if (j < h || j >= k) out.push_back(j);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

// Request exchange shared by the SpMV and SpMM plans: each rank tells every
// owner which of its ids it needs, and learns what it must send in return.
struct ExchangeShape {
    std::vector<index_t> recv_ids;               // sorted
    std::vector<index_t> recv_counts;            // per source
    std::vector<std::vector<index_t>> send_ids;  // per destination
};

ExchangeShape exchange_requests(RankCtx& ctx, const Partition& col_part,
                                std::vector<index_t> needed) {
    const int p = ctx.nranks();
    ExchangeShape shape;
    shape.recv_ids = std::move(needed);
    shape.recv_counts.assign(p, 0);
    shape.send_ids.resize(p);

    std::vector<Packet> requests(p);
    for (const index_t g : shape.recv_ids) {
        const int owner = col_part.owner(g);
        if (owner == ctx.rank())
            throw Error(ErrorCode::internal, "halo plan: owned id in receive set");
        requests[owner].ints.push_back(g);
        ++shape.recv_counts[owner];
    }
    std::vector<Packet> incoming = ctx.alltoallv(std::move(requests));
    for (int s = 0; s < p; ++s) {
        shape.send_ids[s] = std::move(incoming[s].ints);
        for (const index_t g : shape.send_ids[s])
            if (g < col_part.begin(ctx.rank()) || g >= col_part.end(ctx.rank()))
                throw Error(ErrorCode::internal, "halo plan: asked for a row we do not own");
    }
    return shape;
}

}  // namespace

HaloPlan build_spmv_plan(RankCtx& ctx, const DistMatrix& A, const Partition& col_part) {
    if (col_part.global_n != A.global_ncols)
        throw Error(ErrorCode::contract_violation,
                    "build_spmv_plan: column partition does not span the matrix columns");
    HaloPlan plan;
    plan.col_part = col_part;
    plan.fingerprint = MatrixFingerprint::of(A.local);

    ExchangeShape shape =
        exchange_requests(ctx, col_part, build_rows_to_receive(A.local, col_part, ctx.rank()));
    plan.recv_ids = std::move(shape.recv_ids);
    plan.recv_counts = std::move(shape.recv_counts);
    plan.send_ids = std::move(shape.send_ids);

    const index_t h = col_part.begin(ctx.rank());
    const index_t k = col_part.end(ctx.rank());
    for (index_t i = 0; i < A.local.nrows; ++i) {
        for (const index_t j : A.local.row_cols(i)) {
            if (j < h || j >= k) {
                plan.boundary_rows.push_back(i);
                break;
            }
        }
    }
    return plan;
}

const HaloPlan& ensure_spmv_plan(RankCtx& ctx, DistMatrix& A) {
    if (!A.cached_plan || !(A.cached_plan->fingerprint == MatrixFingerprint::of(A.local)))
        A.cached_plan = std::make_shared<HaloPlan>(build_spmv_plan(ctx, A, A.part));
    return *A.cached_plan;
}

void spmv_dist(RankCtx& ctx, const DistMatrix& A, const DistVector& x, const HaloPlan& plan,
               bool overlap, DistVector& y) {
    if (!(MatrixFingerprint::of(A.local) == plan.fingerprint))
        throw Error(ErrorCode::contract_violation,
                    "spmv_dist: stale halo plan (matrix content changed)");
    check_partition_match(x.part, plan.col_part, "spmv_dist x");
    if (x.part.global_n != A.global_ncols)
        throw Error(ErrorCode::contract_violation, "spmv_dist: x does not conform to A columns");
    y.part = A.part;
    y.local.assign(static_cast<std::size_t>(A.local.nrows), 0.0);

    const index_t h = plan.col_part.begin(ctx.rank());
    const index_t k = plan.col_part.end(ctx.rank());

    // Issue sends first; the runtime progresses them while we compute.
    for (int d = 0; d < ctx.nranks(); ++d) {
        if (plan.send_ids[d].empty()) continue;
        Packet pkt;
        pkt.reals.reserve(plan.send_ids[d].size());
        for (const index_t g : plan.send_ids[d]) pkt.reals.push_back(x.local[g - h]);
        ctx.send(d, kTagSpmvHalo, std::move(pkt));
    }

    std::vector<real_t> halo(plan.recv_ids.size());
    const auto complete_receives = [&] {
        std::size_t off = 0;
        for (int s = 0; s < ctx.nranks(); ++s) {
            if (plan.recv_counts[s] == 0) continue;
            Packet pkt = ctx.recv(s, kTagSpmvHalo);
            if (pkt.reals.size() != static_cast<std::size_t>(plan.recv_counts[s]))
                throw Error(ErrorCode::internal, "spmv_dist: halo payload size mismatch");
            std::copy(pkt.reals.begin(), pkt.reals.end(), halo.begin() + off);
            off += pkt.reals.size();
        }
    };

    // Every row is summed in ascending column order; only the schedule of
    // boundary rows depends on the overlap flag.
    const auto run_rows = [&](bool boundary_pass) {
        std::size_t next_boundary = 0;
        for (index_t i = 0; i < A.local.nrows; ++i) {
            const bool is_boundary = next_boundary < plan.boundary_rows.size() &&
                                     plan.boundary_rows[next_boundary] == i;
            if (is_boundary) ++next_boundary;
            if (is_boundary != boundary_pass) continue;
            real_t sum = 0.0;
            for (index_t t = A.local.row_ptr[i]; t < A.local.row_ptr[i + 1]; ++t) {
                const index_t j = A.local.col_idx[t];
                real_t xj;
                if (j >= h && j < k) {
                    xj = x.local[j - h];
                } else {
                    const auto it =
                        std::lower_bound(plan.recv_ids.begin(), plan.recv_ids.end(), j);
                    xj = halo[static_cast<std::size_t>(it - plan.recv_ids.begin())];
                }
                sum += A.local.values[t] * xj;
            }
            y.local[i] = sum;
        }
    };

    if (overlap) {
        run_rows(false);  // interior rows while halo values are in flight
        complete_receives();
        run_rows(true);
    } else {
        complete_receives();
        run_rows(false);
        run_rows(true);
    }
}

DistVector spmv_dist(RankCtx& ctx, const DistMatrix& A, const DistVector& x,
                     const HaloPlan& plan, bool overlap) {
    DistVector y;
    spmv_dist(ctx, A, x, plan, overlap, y);
    return y;
}

DistMatrix spmm_dist(RankCtx& ctx, const DistMatrix& A, const DistMatrix& B,
                     SpmmTimings* timings) {
    if (A.global_ncols != B.part.global_n)
        throw Error(ErrorCode::contract_violation,
                    "spmm_dist: A column space does not match B row space");

    const auto t0 = Clock::now();

    // 1) rows of B this rank must harvest, grouped by owner.
    ExchangeShape shape =
        exchange_requests(ctx, B.part, build_rows_to_receive(A.local, B.part, ctx.rank()));

    // 2) nnz-count exchange so receive buffers can be sized up front.
    const index_t hB = B.part.begin(ctx.rank());
    std::vector<Packet> count_chunks(ctx.nranks());
    for (int d = 0; d < ctx.nranks(); ++d)
        for (const index_t g : shape.send_ids[d]) {
            const index_t li = g - hB;
            count_chunks[d].ints.push_back(B.local.row_ptr[li + 1] - B.local.row_ptr[li]);
        }
    std::vector<Packet> counts_in = ctx.alltoallv(std::move(count_chunks));

    std::vector<index_t> row_nnz(shape.recv_ids.size());
    {
        std::size_t off = 0;
        for (int s = 0; s < ctx.nranks(); ++s) {
            if (counts_in[s].ints.size() != static_cast<std::size_t>(shape.recv_counts[s]))
                throw Error(ErrorCode::internal, "spmm_dist: count exchange mismatch");
            for (const index_t c : counts_in[s].ints) row_nnz[off++] = c;
        }
    }

    // 3) point-to-point payload exchange of the harvested rows.
    for (int d = 0; d < ctx.nranks(); ++d) {
        if (shape.send_ids[d].empty()) continue;
        Packet pkt;
        for (const index_t g : shape.send_ids[d]) {
            const index_t li = g - hB;
            for (index_t t = B.local.row_ptr[li]; t < B.local.row_ptr[li + 1]; ++t) {
                pkt.ints.push_back(B.local.col_idx[t]);
                pkt.reals.push_back(B.local.values[t]);
            }
        }
        ctx.send(d, kTagSpmmRows, std::move(pkt));
    }

    // 4) merge into the auxiliary CSR of the segmented view. Owners are
    // drained in rank order and row blocks are contiguous, so the harvested
    // rows arrive already sorted by global id.
    CsrMatrix aux(static_cast<index_t>(shape.recv_ids.size()), B.global_ncols);
    {
        index_t total = 0;
        for (const index_t c : row_nnz) total += c;
        aux.col_idx.reserve(static_cast<std::size_t>(total));
        aux.values.reserve(static_cast<std::size_t>(total));
    }
    {
        std::size_t row = 0;
        for (int s = 0; s < ctx.nranks(); ++s) {
            if (shape.recv_counts[s] == 0) continue;
            Packet pkt = ctx.recv(s, kTagSpmmRows);
            index_t expect = 0;
            for (index_t r = 0; r < shape.recv_counts[s]; ++r)
                expect += row_nnz[row + static_cast<std::size_t>(r)];
            if (pkt.ints.size() != static_cast<std::size_t>(expect))
                throw Error(ErrorCode::internal, "spmm_dist: row payload size mismatch");
            aux.col_idx.insert(aux.col_idx.end(), pkt.ints.begin(), pkt.ints.end());
            aux.values.insert(aux.values.end(), pkt.reals.begin(), pkt.reals.end());
            for (index_t r = 0; r < shape.recv_counts[s]; ++r) {
                aux.row_ptr[row + 1] = aux.row_ptr[row] + row_nnz[row];
                ++row;
            }
        }
    }
    if (!std::is_sorted(shape.recv_ids.begin(), shape.recv_ids.end()))
        throw Error(ErrorCode::internal, "spmm_dist: harvested row map not sorted");

    if (timings) timings->exchange_seconds += seconds_since(t0);
    const auto t1 = Clock::now();

    // 5) one local product over the segmented view.
    SegmentedCsr view(B.local, B.part.begin(ctx.rank()), B.part.end(ctx.rank()), B.global_ncols,
                      aux, shape.recv_ids);
    DistMatrix C;
    C.part = A.part;
    C.global_ncols = B.global_ncols;
    C.local = spgemm_local(A.local, view);
    if (timings) timings->product_seconds += seconds_since(t1);
    return C;
}

real_t dot_dist(RankCtx& ctx, const DistVector& x, const DistVector& y) {
    check_partition_match(x.part, y.part, "dot_dist");
    if (x.local.size() != y.local.size())
        throw Error(ErrorCode::contract_violation, "dot_dist: local length mismatch");
    real_t partial = 0.0;
    for (std::size_t i = 0; i < x.local.size(); ++i) partial += x.local[i] * y.local[i];
    return ctx.allreduce_sum(partial);
}

real_t norm2_dist(RankCtx& ctx, const DistVector& x) { return std::sqrt(dot_dist(ctx, x, x)); }

void axpy_local(real_t alpha, const DistVector& x, DistVector& y) {
    check_partition_match(x.part, y.part, "axpy_local");
    if (x.local.size() != y.local.size())
        throw Error(ErrorCode::contract_violation, "axpy_local: local length mismatch");
    for (std::size_t i = 0; i < x.local.size(); ++i) y.local[i] += alpha * x.local[i];
}

CsrMatrix gather_matrix(RankCtx& ctx, const DistMatrix& A) {
    Packet mine;
    mine.ints.push_back(A.local.nrows);
    for (index_t i = 0; i < A.local.nrows; ++i)
        mine.ints.push_back(A.local.row_ptr[i + 1] - A.local.row_ptr[i]);
    mine.ints.insert(mine.ints.end(), A.local.col_idx.begin(), A.local.col_idx.end());
    mine.reals = A.local.values;

    std::vector<Packet> parts = ctx.allgather(std::move(mine));
    CsrMatrix G(A.part.global_n, A.global_ncols);
    index_t row = 0;
    for (Packet& p : parts) {
        const index_t rows = p.ints[0];
        for (index_t i = 0; i < rows; ++i)
            G.row_ptr[row + i + 1] = G.row_ptr[row + i] + p.ints[1 + i];
        G.col_idx.insert(G.col_idx.end(), p.ints.begin() + 1 + rows, p.ints.end());
        G.values.insert(G.values.end(), p.reals.begin(), p.reals.end());
        row += rows;
    }
    return G;
}

std::vector<real_t> gather_vector(RankCtx& ctx, const DistVector& x) {
    Packet mine;
    mine.reals = x.local;
    std::vector<Packet> parts = ctx.allgather(std::move(mine));
    std::vector<real_t> out;
    out.reserve(static_cast<std::size_t>(x.part.global_n));
    for (const Packet& p : parts) out.insert(out.end(), p.reals.begin(), p.reals.end());
    return out;
}

DistMatrix distribute_matrix(const RankCtx& ctx, const CsrMatrix& A, const Partition& part) {
    if (part.global_n != A.nrows)
        throw Error(ErrorCode::contract_violation, "distribute_matrix: partition/matrix mismatch");
    const index_t h = part.begin(ctx.rank());
    const index_t k = part.end(ctx.rank());
    DistMatrix D;
    D.part = part;
    D.global_ncols = A.ncols;
    D.local = CsrMatrix(k - h, A.ncols);
    const index_t base = A.row_ptr[h];
    for (index_t i = 0; i <= k - h; ++i) D.local.row_ptr[i] = A.row_ptr[h + i] - base;
    D.local.col_idx.assign(A.col_idx.begin() + base, A.col_idx.begin() + A.row_ptr[k]);
    D.local.values.assign(A.values.begin() + base, A.values.begin() + A.row_ptr[k]);
    return D;
}

}  // namespace pairamg
