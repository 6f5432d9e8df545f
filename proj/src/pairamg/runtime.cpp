#include "pairamg/runtime.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace pairamg {

Partition Partition::uniform(index_t n, int nranks) {
    if (n < 0 || nranks < 1)
        throw Error(ErrorCode::invalid_argument, "partition: need n >= 0 and nranks >= 1");
    Partition p;
    p.global_n = n;
    p.starts.resize(nranks + 1);
    for (int r = 0; r <= nranks; ++r)
        p.starts[r] = (n / nranks) * r + std::min<index_t>(n % nranks, r);
    return p;
}

Partition Partition::from_counts(std::span<const index_t> counts) {
    Partition p;
    p.starts.assign(1, 0);
    for (const index_t c : counts) {
        if (c < 0) throw Error(ErrorCode::invalid_argument, "partition: negative block size");
        p.starts.push_back(p.starts.back() + c);
    }
    p.global_n = p.starts.back();
    return p;
}

int Partition::owner(index_t global_row) const {
    if (global_row < 0 || global_row >= global_n)
        throw Error(ErrorCode::contract_violation,
                    "partition: row " + std::to_string(global_row) + " outside [0, " +
                        std::to_string(global_n) + ")");
    const auto it = std::upper_bound(starts.begin(), starts.end(), global_row);
    return static_cast<int>(it - starts.begin()) - 1;
}

CommStats CommStats::operator-(const CommStats& o) const {
    CommStats d;
    d.p2p_messages = p2p_messages - o.p2p_messages;
    d.p2p_bytes = p2p_bytes - o.p2p_bytes;
    d.collective_messages = collective_messages - o.collective_messages;
    d.collective_bytes = collective_bytes - o.collective_bytes;
    d.allgathers = allgathers - o.allgathers;
    d.alltoallvs = alltoallvs - o.alltoallvs;
    d.allreduces = allreduces - o.allreduces;
    d.barriers = barriers - o.barriers;
    return d;
}

namespace detail {

// Mailboxes are per destination rank; messages match on (source, tag) in
// FIFO order per key.
struct Mailbox {
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::pair<int, index_t>, std::deque<Packet>> queues;
    bool aborted = false;
};

// Thrown into receivers blocked on a rank that already failed; never the
// root cause, so failure reporting skips it when possible.
struct AbortedError : Error {
    AbortedError() : Error(ErrorCode::internal, "receive aborted: another rank failed") {}
};

struct SharedState {
    std::vector<std::unique_ptr<Mailbox>> mailboxes;
    std::chrono::milliseconds timeout{30000};

    explicit SharedState(int nranks, std::chrono::milliseconds t) : timeout(t) {
        mailboxes.reserve(nranks);
        for (int r = 0; r < nranks; ++r) mailboxes.push_back(std::make_unique<Mailbox>());
    }

    void abort_all() {
        for (auto& mb : mailboxes) {
            std::lock_guard<std::mutex> lock(mb->mu);
            mb->aborted = true;
            mb->cv.notify_all();
        }
    }
};

void run_rank_programs(const RuntimeOptions& opts,
                       const std::function<void(RankCtx&)>& program) {
    if (opts.nranks < 1)
        throw Error(ErrorCode::invalid_argument, "spawn_ranks: nranks must be >= 1");

    SharedState shared(opts.nranks, opts.deadlock_timeout);
    std::vector<std::exception_ptr> failures(opts.nranks);

    if (opts.nranks == 1) {
        RankCtx ctx(shared, 0, 1);
        program(ctx);
        return;
    }

    std::vector<std::thread> workers;
    workers.reserve(opts.nranks);
    for (int r = 0; r < opts.nranks; ++r) {
        workers.emplace_back([&, r] {
            RankCtx ctx(shared, r, opts.nranks);
            try {
                program(ctx);
            } catch (...) {
                failures[r] = std::current_exception();
                shared.abort_all();
            }
        });
    }
    for (auto& t : workers) t.join();

    int nfailed = 0;
    int first = -1;        // lowest rank with a root-cause failure
    int first_any = -1;
    for (int r = 0; r < opts.nranks; ++r) {
        if (!failures[r]) continue;
        ++nfailed;
        if (first_any < 0) first_any = r;
        if (first < 0) {
            try {
                std::rethrow_exception(failures[r]);
            } catch (const AbortedError&) {
            } catch (...) {
                first = r;
            }
        }
    }
    if (nfailed == 0) return;
    if (first < 0) first = first_any;
    try {
        std::rethrow_exception(failures[first]);
    } catch (const Error& e) {
        std::ostringstream msg;
        msg << "rank " << first << ": " << e.what();
        if (nfailed > 1) msg << " (" << (nfailed - 1) << " other rank(s) failed too)";
        throw Error(e.code(), msg.str());
    } catch (const std::exception& e) {
        throw Error(ErrorCode::internal, "rank " + std::to_string(first) + ": " + e.what());
    } catch (...) {
        throw Error(ErrorCode::internal,
                    "rank " + std::to_string(first) + ": unknown exception");
    }
}

}  // namespace detail

namespace {

// User tags stay below this; collective rounds use the sequence-stamped
// space above it, so out-of-order collective participation surfaces as a
// deadlock timeout instead of silent mismatched data.
constexpr index_t kCollectiveTagBase = index_t{1} << 40;

}  // namespace

void RankCtx::send_internal(int dest, index_t tag, Packet payload, bool collective) {
    if (dest < 0 || dest >= nranks_)
        throw Error(ErrorCode::contract_violation, "send: destination rank out of range");
    const std::size_t bytes = payload.byte_size();
    if (collective) {
        stats_.collective_messages += 1;
        stats_.collective_bytes += static_cast<std::int64_t>(bytes);
    } else {
        stats_.p2p_messages += 1;
        stats_.p2p_bytes += static_cast<std::int64_t>(bytes);
    }
    auto& mb = *shared_->mailboxes[dest];
    {
        std::lock_guard<std::mutex> lock(mb.mu);
        mb.queues[{rank_, tag}].push_back(std::move(payload));
    }
    mb.cv.notify_all();
}

Packet RankCtx::recv_internal(int source, index_t tag) {
    if (source < 0 || source >= nranks_)
        throw Error(ErrorCode::contract_violation, "recv: source rank out of range");
    auto& mb = *shared_->mailboxes[rank_];
    std::unique_lock<std::mutex> lock(mb.mu);
    const auto key = std::make_pair(source, tag);
    const bool ok = mb.cv.wait_for(lock, shared_->timeout, [&] {
        if (mb.aborted) return true;
        const auto it = mb.queues.find(key);
        return it != mb.queues.end() && !it->second.empty();
    });
    if (mb.aborted) throw detail::AbortedError();
    if (!ok)
        throw Error(ErrorCode::deadlock,
                    "deadlock timeout: rank " + std::to_string(rank_) +
                        " blocked receiving (source=" + std::to_string(source) +
                        ", tag=" + std::to_string(tag) + ")");
    auto it = mb.queues.find(key);
    Packet p = std::move(it->second.front());
    it->second.pop_front();
    return p;
}

void RankCtx::send(int dest, index_t tag, Packet payload) {
    if (tag < 0 || tag >= kCollectiveTagBase)
        throw Error(ErrorCode::contract_violation, "send: tag out of user range");
    send_internal(dest, tag, std::move(payload), false);
}

Packet RankCtx::recv(int source, index_t tag) {
    if (tag < 0 || tag >= kCollectiveTagBase)
        throw Error(ErrorCode::contract_violation, "recv: tag out of user range");
    return recv_internal(source, tag);
}

std::vector<Packet> RankCtx::allgather(Packet local) {
    stats_.allgathers += 1;
    const index_t tag = kCollectiveTagBase + collective_seq_++;
    for (int d = 0; d < nranks_; ++d)
        if (d != rank_) send_internal(d, tag, local, true);
    std::vector<Packet> out(nranks_);
    for (int s = 0; s < nranks_; ++s)
        out[s] = (s == rank_) ? std::move(local) : recv_internal(s, tag);
    return out;
}

std::vector<Packet> RankCtx::alltoallv(std::vector<Packet> chunks) {
    if (static_cast<int>(chunks.size()) != nranks_)
        throw Error(ErrorCode::contract_violation, "alltoallv: need one chunk per rank");
    stats_.alltoallvs += 1;
    const index_t tag = kCollectiveTagBase + collective_seq_++;
    for (int d = 0; d < nranks_; ++d)
        if (d != rank_) send_internal(d, tag, std::move(chunks[d]), true);
    std::vector<Packet> out(nranks_);
    for (int s = 0; s < nranks_; ++s)
        out[s] = (s == rank_) ? std::move(chunks[rank_]) : recv_internal(s, tag);
    return out;
}

std::vector<real_t> RankCtx::allreduce_sum(std::span<const real_t> x) {
    stats_.allreduces += 1;
    const index_t tag = kCollectiveTagBase + collective_seq_++;
    Packet mine;
    mine.reals.assign(x.begin(), x.end());
    for (int d = 0; d < nranks_; ++d)
        if (d != rank_) send_internal(d, tag, mine, true);
    // Rank-ascending accumulation gives every rank the identical bit pattern.
    std::vector<real_t> acc(x.size(), 0.0);
    for (int s = 0; s < nranks_; ++s) {
        Packet part = (s == rank_) ? std::move(mine) : recv_internal(s, tag);
        if (part.reals.size() != acc.size())
            throw Error(ErrorCode::contract_violation, "allreduce: mismatched lengths");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part.reals[i];
    }
    return acc;
}

real_t RankCtx::allreduce_sum(real_t x) {
    return allreduce_sum(std::span<const real_t>(&x, 1))[0];
}

std::vector<index_t> RankCtx::allreduce_sum(std::span<const index_t> x) {
    stats_.allreduces += 1;
    const index_t tag = kCollectiveTagBase + collective_seq_++;
    Packet mine;
    mine.ints.assign(x.begin(), x.end());
    for (int d = 0; d < nranks_; ++d)
        if (d != rank_) send_internal(d, tag, mine, true);
    std::vector<index_t> acc(x.size(), 0);
    for (int s = 0; s < nranks_; ++s) {
        Packet part = (s == rank_) ? std::move(mine) : recv_internal(s, tag);
        if (part.ints.size() != acc.size())
            throw Error(ErrorCode::contract_violation, "allreduce: mismatched lengths");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part.ints[i];
    }
    return acc;
}

void RankCtx::barrier() {
    stats_.barriers += 1;
    const index_t tag = kCollectiveTagBase + collective_seq_++;
    for (int d = 0; d < nranks_; ++d)
        if (d != rank_) send_internal(d, tag, Packet{}, true);
    for (int s = 0; s < nranks_; ++s)
        if (s != rank_) recv_internal(s, tag);
}

}  // namespace pairamg
