#include "energy_kernels.hpp"

#include <fmt/format.h>

namespace cdf::kernels::serial {

EnergyBreakdown evaluate(const Context& ctx, FieldGradient* grad, std::vector<Branch>* face_branches,
                         std::vector<Branch>* pair_branches) {
    const int m = ctx.field->size();
    FaceValues sums;
    for (int f = 0; f < m; ++f) {
        const FaceOut o = face_terms(ctx, f);
        if (o.zero_vector) throw GeometryError(fmt::format("face {}: zero-length field vector", f));
        sums.align += o.values.align;
        sums.normal += o.values.normal;
        sums.reg += o.values.reg;
        sums.conj += o.values.conj;
        if (grad) {
            grad->du[f] = o.gu;
            grad->dv[f] = o.gv;
        }
        if (face_branches) (*face_branches)[f] = o.branch;
    }

    double smooth_sum = 0.0;
    if (ctx.smooth_active) {
        const auto& pairs = ctx.geom->adjacency.pairs;
        for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
            const PairOut o = pair_term(ctx, p);
            smooth_sum += o.value;
            if (grad) {
                grad->du[pairs[p].face_a] += o.g_ua;
                grad->dv[pairs[p].face_a] += o.g_va;
                grad->du[pairs[p].face_b] += o.g_ub;
                grad->dv[pairs[p].face_b] += o.g_vb;
            }
            if (pair_branches) (*pair_branches)[p] = o.branch;
        }
    }

    const double stroke = stroke_term(ctx, grad);
    return assemble(ctx, sums, smooth_sum, stroke);
}

}  // namespace cdf::kernels::serial
