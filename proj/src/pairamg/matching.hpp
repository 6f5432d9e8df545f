#pragma once

#include "pairamg/csr.hpp"

namespace pairamg {

/// Symmetric weighted adjacency of a local diagonal block; no self-loops.
struct WeightedGraph {
    index_t n = 0;
    CsrMatrix adj;               // weights in adj.values, local indices
    index_t clamped_edges = 0;   // edge weights replaced by the negative sentinel
};

constexpr index_t kUnmatched = -1;

struct Matching {
    std::vector<index_t> mate;  // mate[i] = partner or kUnmatched

    index_t matched_pairs() const {
        index_t c = 0;
        for (index_t i = 0; i < static_cast<index_t>(mate.size()); ++i)
            if (mate[i] > i) ++c;
        return c;
    }
};

/// Weight sentinel for edges whose formula value is non-finite; never
/// preferred over any finite weight.
constexpr real_t kClampedWeight = -1e300;

/// Edge weights from the smooth vector w over the square local block:
/// w(i,j) = 1 - 2*a_ij*w_i*w_j / (a_ii*w_i^2 + a_jj*w_j^2). The graph keeps
/// the stored symmetric off-diagonal pattern of the block.
WeightedGraph build_weights(const CsrMatrix& A_localblock, std::span<const real_t> w);

/// Suitor half-approximate maximum weight matching. Deterministic: neighbors
/// are scanned in ascending index order and ties keep the smaller index.
Matching suitor_match(const WeightedGraph& g);

/// Restriction of the owned rows to the owned columns [begin, end), shifted
/// to local indices; the decoupled view cross-rank entries are dropped from.
CsrMatrix extract_diagonal_block(const CsrMatrix& local_rows, index_t owned_begin,
                                 index_t owned_end);

}  // namespace pairamg
