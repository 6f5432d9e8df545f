#include "pairamg/matching.hpp"

#include <cmath>
#include <limits>

namespace pairamg {

CsrMatrix extract_diagonal_block(const CsrMatrix& local_rows, index_t owned_begin,
                                 index_t owned_end) {
    const index_t n = owned_end - owned_begin;
    if (local_rows.nrows != n)
        throw Error(ErrorCode::contract_violation,
                    "extract_diagonal_block: row count does not match owned range");
    CsrMatrix B(n, n);
    for (index_t i = 0; i < n; ++i) {
        for (index_t t = local_rows.row_ptr[i]; t < local_rows.row_ptr[i + 1]; ++t) {
            const index_t j = local_rows.col_idx[t];
            if (j >= owned_begin && j < owned_end) {
                B.col_idx.push_back(j - owned_begin);
                B.values.push_back(local_rows.values[t]);
            }
        }
        B.row_ptr[i + 1] = static_cast<index_t>(B.col_idx.size());
    }
    return B;
}

WeightedGraph build_weights(const CsrMatrix& A_localblock, std::span<const real_t> w) {
    if (A_localblock.nrows != A_localblock.ncols)
        throw Error(ErrorCode::contract_violation, "build_weights: block not square");
    if (static_cast<index_t>(w.size()) != A_localblock.nrows)
        throw Error(ErrorCode::contract_violation, "build_weights: smooth vector length mismatch");

    const index_t n = A_localblock.nrows;
    std::vector<real_t> diag(n, 0.0);
    for (index_t i = 0; i < n; ++i)
        for (index_t t = A_localblock.row_ptr[i]; t < A_localblock.row_ptr[i + 1]; ++t)
            if (A_localblock.col_idx[t] == i) diag[i] = A_localblock.values[t];

    WeightedGraph g;
    g.n = n;
    g.adj = CsrMatrix(n, n);
    for (index_t i = 0; i < n; ++i) {
        for (index_t t = A_localblock.row_ptr[i]; t < A_localblock.row_ptr[i + 1]; ++t) {
            const index_t j = A_localblock.col_idx[t];
            if (j == i) continue;  // no self-loops
            const real_t num = 2.0 * A_localblock.values[t] * w[i] * w[j];
            const real_t den = diag[i] * w[i] * w[i] + diag[j] * w[j] * w[j];
            real_t weight = 1.0 - num / den;
            if (!std::isfinite(weight)) {
                weight = kClampedWeight;
                ++g.clamped_edges;
            }
            g.adj.col_idx.push_back(j);
            g.adj.values.push_back(weight);
        }
        g.adj.row_ptr[i + 1] = static_cast<index_t>(g.adj.col_idx.size());
    }
    return g;
}

Matching suitor_match(const WeightedGraph& g) {
    const index_t n = g.n;
    Matching m;
    m.mate.assign(static_cast<std::size_t>(n), kUnmatched);
    if (n == 0) return m;

    std::vector<index_t> suitor(static_cast<std::size_t>(n), kUnmatched);
    std::vector<real_t> suitor_weight(static_cast<std::size_t>(n),
                                      -std::numeric_limits<real_t>::infinity());

    for (index_t u = 0; u < n; ++u) {
        index_t current = u;
        while (current != kUnmatched) {
            // Heaviest neighbor that would accept the bid; ascending scan
            // with strict improvement keeps the smallest index on ties.
            index_t partner = kUnmatched;
            real_t best = -std::numeric_limits<real_t>::infinity();
            for (index_t t = g.adj.row_ptr[current]; t < g.adj.row_ptr[current + 1]; ++t) {
                const index_t v = g.adj.col_idx[t];
                const real_t wv = g.adj.values[t];
                if (wv > suitor_weight[v] && wv > best) {
                    best = wv;
                    partner = v;
                }
            }
            if (partner == kUnmatched) break;
            const index_t displaced = suitor[partner];
            suitor[partner] = current;
            suitor_weight[partner] = best;
            current = displaced;  // re-bid whoever lost the slot
        }
    }

    for (index_t v = 0; v < n; ++v) {
        const index_t s = suitor[v];
        if (s != kUnmatched && suitor[s] == v) m.mate[v] = s;
    }
    return m;
}

}  // namespace pairamg
