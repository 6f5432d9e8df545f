#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "pairamg/types.hpp"

namespace pairamg {

/// Row-block partition: rank r owns global rows [starts[r], starts[r+1]).
struct Partition {
    index_t global_n = 0;
    std::vector<index_t> starts;  // length nranks + 1

    static Partition uniform(index_t n, int nranks);
    static Partition from_counts(std::span<const index_t> counts);

    int nranks() const { return static_cast<int>(starts.size()) - 1; }
    index_t begin(int rank) const { return starts[rank]; }
    index_t end(int rank) const { return starts[rank + 1]; }
    index_t extent(int rank) const { return starts[rank + 1] - starts[rank]; }
    int owner(index_t global_row) const;
    bool operator==(const Partition&) const = default;
};

/// Transferable message payload: index and value arrays.
struct Packet {
    std::vector<index_t> ints;
    std::vector<real_t> reals;

    std::size_t byte_size() const {
        return ints.size() * sizeof(index_t) + reals.size() * sizeof(real_t);
    }
};

/// Per-rank transport counters. Collective traffic is tracked apart from
/// point-to-point traffic so pattern assertions can tell them apart.
struct CommStats {
    std::int64_t p2p_messages = 0;
    std::int64_t p2p_bytes = 0;
    std::int64_t collective_messages = 0;
    std::int64_t collective_bytes = 0;
    std::int64_t allgathers = 0;
    std::int64_t alltoallvs = 0;
    std::int64_t allreduces = 0;
    std::int64_t barriers = 0;

    CommStats operator-(const CommStats& o) const;
    std::int64_t total_messages() const { return p2p_messages + collective_messages; }
};

struct RuntimeOptions {
    int nranks = 1;
    std::chrono::milliseconds deadlock_timeout{30000};
};

class RankCtx;

namespace detail {
struct SharedState;
void run_rank_programs(const RuntimeOptions& opts,
                       const std::function<void(RankCtx&)>& program);
}

/// Handle a rank program uses to communicate. One per worker; methods are
/// called from that worker's thread only.
class RankCtx {
public:
    int rank() const { return rank_; }
    int nranks() const { return nranks_; }

    /// Non-blocking tagged send; the payload is moved into the destination
    /// mailbox immediately and completes independently of the receiver.
    void send(int dest, index_t tag, Packet payload);

    /// Blocking matched receive; throws a deadlock error after the
    /// configured timeout.
    Packet recv(int source, index_t tag);

    // Collectives. Every rank must call them in the same program order.
    std::vector<Packet> allgather(Packet local);
    std::vector<Packet> alltoallv(std::vector<Packet> chunks);
    real_t allreduce_sum(real_t x);
    std::vector<real_t> allreduce_sum(std::span<const real_t> x);
    std::vector<index_t> allreduce_sum(std::span<const index_t> x);
    void barrier();

    const CommStats& stats() const { return stats_; }

private:
    friend void detail::run_rank_programs(const RuntimeOptions&,
                                          const std::function<void(RankCtx&)>&);
    RankCtx(detail::SharedState& shared, int rank, int nranks)
        : shared_(&shared), rank_(rank), nranks_(nranks) {}

    void send_internal(int dest, index_t tag, Packet payload, bool collective);
    Packet recv_internal(int source, index_t tag);

    detail::SharedState* shared_;
    int rank_;
    int nranks_;
    index_t collective_seq_ = 0;
    CommStats stats_;
};

/// Runs one worker per rank to completion and returns the per-rank results
/// in rank order. The lowest-rank failure propagates after all workers have
/// been drained.
template <typename F>
auto spawn_ranks(const RuntimeOptions& opts, F&& program)
    -> std::conditional_t<std::is_void_v<std::invoke_result_t<F, RankCtx&>>, void,
                          std::vector<std::invoke_result_t<F, RankCtx&>>> {
    using R = std::invoke_result_t<F, RankCtx&>;
    if constexpr (std::is_void_v<R>) {
        detail::run_rank_programs(opts, [&program](RankCtx& ctx) { program(ctx); });
    } else {
        std::vector<std::optional<R>> slots(static_cast<std::size_t>(opts.nranks));
        detail::run_rank_programs(
            opts, [&program, &slots](RankCtx& ctx) { slots[ctx.rank()] = program(ctx); });
        std::vector<R> out;
        out.reserve(slots.size());
        for (auto& s : slots) out.push_back(std::move(*s));
        return out;
    }
}

template <typename F>
auto spawn_ranks(int nranks, F&& program) {
    RuntimeOptions opts;
    opts.nranks = nranks;
    return spawn_ranks(opts, std::forward<F>(program));
}

}  // namespace pairamg
