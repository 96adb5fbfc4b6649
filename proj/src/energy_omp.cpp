#include "energy_kernels.hpp"

#include <fmt/format.h>

#include <atomic>

namespace cdf::kernels::omp {

EnergyBreakdown evaluate(const Context& ctx, FieldGradient* grad, std::vector<Branch>* face_branches,
                         std::vector<Branch>* pair_branches) {
    const int m = ctx.field->size();
    std::vector<FaceOut> faces(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(static)
    for (int f = 0; f < m; ++f) faces[f] = face_terms(ctx, f);

    FaceValues sums;
    for (int f = 0; f < m; ++f) {
        const FaceOut& o = faces[f];
        if (o.zero_vector) throw GeometryError(fmt::format("face {}: zero-length field vector", f));
        sums.align += o.values.align;
        sums.normal += o.values.normal;
        sums.reg += o.values.reg;
        sums.conj += o.values.conj;
    }
    if (face_branches)
        for (int f = 0; f < m; ++f) (*face_branches)[f] = faces[f].branch;

    double smooth_sum = 0.0;
    std::vector<PairOut> pairs_out;
    if (ctx.smooth_active) {
        const int np = static_cast<int>(ctx.geom->adjacency.pairs.size());
        pairs_out.resize(static_cast<std::size_t>(np));
#pragma omp parallel for schedule(static)
        for (int p = 0; p < np; ++p) pairs_out[p] = pair_term(ctx, p);
        for (int p = 0; p < np; ++p) smooth_sum += pairs_out[p].value;
        if (pair_branches)
            for (int p = 0; p < np; ++p) (*pair_branches)[p] = pairs_out[p].branch;
    }

    if (grad) {
        // Gather instead of scatter: each face pulls its pair contributions in
        // ascending pair order, which is the order the serial scatter uses.
        const auto& pairs = ctx.geom->adjacency.pairs;
#pragma omp parallel for schedule(static)
        for (int f = 0; f < m; ++f) {
            Vec3 gu = faces[f].gu;
            Vec3 gv = faces[f].gv;
            if (ctx.smooth_active) {
                for (int p : ctx.geom->face_pairs[f]) {
                    const PairOut& o = pairs_out[p];
                    if (pairs[p].face_a == f) {
                        gu += o.g_ua;
                        gv += o.g_va;
                    } else {
                        gu += o.g_ub;
                        gv += o.g_vb;
                    }
                }
            }
            grad->du[f] = gu;
            grad->dv[f] = gv;
        }
    }

    const double stroke = stroke_term(ctx, grad);
    return assemble(ctx, sums, smooth_sum, stroke);
}

}  // namespace cdf::kernels::omp
