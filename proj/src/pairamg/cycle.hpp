#pragma once

#include "pairamg/amg.hpp"

namespace pairamg {

struct CycleConfig {
    int pre_sweeps = 4;
    int post_sweeps = 4;
    int coarsest_sweeps = 20;
    real_t relax_weight = 1.0;
};

/// Throws on invalid counts; returns a warning when pre != post (the
/// preconditioner is only symmetric with equal sweep counts).
std::string validate_cycle_config(const CycleConfig& cfg);

/// d_i = a_ii + sum_{j != i} |a_ij| over the full distributed rows.
DistVector l1_diagonal_dist(RankCtx& ctx, const DistMatrix& A);

/// nu sweeps of x <- x + omega * D^-1 (r - A x) from x0 (zero when x0 is
/// null; the first zero-start sweep needs no matrix product).
DistVector l1_jacobi_sweeps(RankCtx& ctx, const DistMatrix& A, const HaloPlan& plan,
                            const DistVector& d_l1, const DistVector& r, const DistVector* x0,
                            int nu, real_t omega = 1.0);

/// One symmetric V-cycle application x ~= B r starting at `level`
/// (0-based): pre-smooth from zero, restrict the residual, recurse (or run
/// coarsest_sweeps of the same smoother at the last level), correct through
/// P, post-smooth. Transfer applications are purely local.
DistVector vcycle_apply(RankCtx& ctx, const Hierarchy& h, const CycleConfig& cfg,
                        const DistVector& r, int level = 0);

// Local transfer applications for the block prolongator of `coarse`
// (h.levels[k], k >= 1).
DistVector restrict_to_coarse(RankCtx& ctx, const Level& coarse, const DistVector& fine);
void prolongate_add(RankCtx& ctx, const Level& coarse, const DistVector& coarse_e,
                    DistVector& fine_x);

}  // namespace pairamg
