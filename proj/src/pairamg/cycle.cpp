#include "pairamg/cycle.hpp"

#include <cmath>

namespace pairamg {

std::string validate_cycle_config(const CycleConfig& cfg) {
    if (cfg.pre_sweeps < 0 || cfg.post_sweeps < 0 || cfg.coarsest_sweeps < 0)
        throw Error(ErrorCode::invalid_argument, "cycle config: sweep counts must be >= 0");
    if (cfg.pre_sweeps != cfg.post_sweeps)
        return "pre_sweeps != post_sweeps: the V-cycle preconditioner is not symmetric";
    return {};
}

DistVector l1_diagonal_dist(RankCtx& ctx, const DistMatrix& A) {
    if (A.part.global_n != A.global_ncols)
        throw Error(ErrorCode::contract_violation, "l1_diagonal_dist: matrix not square");
    const index_t h = A.part.begin(ctx.rank());
    DistVector d = DistVector::zeros(A.part, ctx);
    for (index_t i = 0; i < A.local.nrows; ++i) {
        real_t acc = 0.0;
        for (index_t t = A.local.row_ptr[i]; t < A.local.row_ptr[i + 1]; ++t) {
            if (A.local.col_idx[t] == h + i)
                acc += A.local.values[t];
            else
                acc += std::abs(A.local.values[t]);
        }
        if (acc == 0.0)
            throw Error(ErrorCode::singular_smoother,
                        "l1_diagonal_dist: zero diagonal weight at global row " +
                            std::to_string(h + i));
        d.local[i] = acc;
    }
    return d;
}

DistVector l1_jacobi_sweeps(RankCtx& ctx, const DistMatrix& A, const HaloPlan& plan,
                            const DistVector& d_l1, const DistVector& r, const DistVector* x0,
                            int nu, real_t omega) {
    if (nu < 0) throw Error(ErrorCode::invalid_argument, "l1_jacobi_sweeps: nu must be >= 0");
    for (const real_t d : d_l1.local)
        if (d == 0.0)
            throw Error(ErrorCode::singular_smoother, "l1_jacobi_sweeps: zero diagonal entry");

    DistVector x = x0 ? *x0 : DistVector::zeros(A.part, ctx);
    if (nu == 0) return x;

    int sweep = 0;
    if (!x0) {
        // Zero start: the first correction is just the scaled residual.
        for (std::size_t i = 0; i < x.local.size(); ++i)
            x.local[i] = omega * r.local[i] / d_l1.local[i];
        ++sweep;
    }
    DistVector Ax;
    for (; sweep < nu; ++sweep) {
        spmv_dist(ctx, A, x, plan, true, Ax);
        for (std::size_t i = 0; i < x.local.size(); ++i)
            x.local[i] += omega * (r.local[i] - Ax.local[i]) / d_l1.local[i];
    }
    return x;
}

DistVector restrict_to_coarse(RankCtx& ctx, const Level& coarse, const DistVector& fine) {
    const index_t fine_begin = coarse.fine_part.begin(ctx.rank());
    DistVector out = DistVector::zeros(coarse.A.part, ctx);
    const CsrMatrix& R = coarse.R_block;
    for (index_t c = 0; c < R.nrows; ++c) {
        real_t sum = 0.0;
        for (index_t t = R.row_ptr[c]; t < R.row_ptr[c + 1]; ++t)
            sum += R.values[t] * fine.local[R.col_idx[t] - fine_begin];
        out.local[c] = sum;
    }
    return out;
}

void prolongate_add(RankCtx& ctx, const Level& coarse, const DistVector& coarse_e,
                    DistVector& fine_x) {
    const index_t coarse_begin = coarse.A.part.begin(ctx.rank());
    const CsrMatrix& P = coarse.P_block;
    for (index_t i = 0; i < P.nrows; ++i)
        for (index_t t = P.row_ptr[i]; t < P.row_ptr[i + 1]; ++t)
            fine_x.local[i] += P.values[t] * coarse_e.local[P.col_idx[t] - coarse_begin];
}

DistVector vcycle_apply(RankCtx& ctx, const Hierarchy& h, const CycleConfig& cfg,
                        const DistVector& r, int level) {
    if (level < 0 || level >= h.nl())
        throw Error(ErrorCode::contract_violation, "vcycle_apply: level out of range");
    const Level& lvl = h.levels[level];
    if (!(r.part == lvl.A.part))
        throw Error(ErrorCode::contract_violation, "vcycle_apply: residual partition mismatch");

    if (level == h.nl() - 1)
        return l1_jacobi_sweeps(ctx, lvl.A, *lvl.spmv_plan, lvl.m_l1, r, nullptr,
                                cfg.coarsest_sweeps, cfg.relax_weight);

    DistVector x = l1_jacobi_sweeps(ctx, lvl.A, *lvl.spmv_plan, lvl.m_l1, r, nullptr,
                                    cfg.pre_sweeps, cfg.relax_weight);

    DistVector resid = spmv_dist(ctx, lvl.A, x, *lvl.spmv_plan, true);
    for (std::size_t i = 0; i < resid.local.size(); ++i)
        resid.local[i] = r.local[i] - resid.local[i];

    const Level& next = h.levels[level + 1];
    const DistVector rc = restrict_to_coarse(ctx, next, resid);
    const DistVector e = vcycle_apply(ctx, h, cfg, rc, level + 1);
    prolongate_add(ctx, next, e, x);

    return l1_jacobi_sweeps(ctx, lvl.A, *lvl.spmv_plan, lvl.m_l1, r, &x, cfg.post_sweeps,
                            cfg.relax_weight);
}

}  // namespace pairamg
