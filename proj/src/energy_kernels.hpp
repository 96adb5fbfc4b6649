#pragma once

// Per-element math shared by the serial reference and the OpenMP kernels.
// Both backends evaluate these in the same order per face, so their results
// agree bit for bit.

#include "cdf/energy.hpp"

#include <cmath>

namespace cdf::kernels {

/// Everything one evaluation needs, resolved once.
struct Context {
    const DirectionField* field = nullptr;
    const SurfaceGeometry* geom = nullptr;
    const CurvatureFrame* frame = nullptr;
    const DirectionField* gt = nullptr;
    const StrokeAssignment* strokes = nullptr;
    EnergyWeights weights;
    bool want_gradient = false;
    bool smooth_active = false;
};

struct FaceValues {
    double align = 0.0;
    double normal = 0.0;
    double reg = 0.0;
    double conj = 0.0;
};

struct FaceOut {
    FaceValues values;
    Vec3 gu = Vec3::Zero();
    Vec3 gv = Vec3::Zero();
    Branch branch = Branch::Direct;
    bool zero_vector = false;
};

struct PairOut {
    double value = 0.0;
    Vec3 g_ua = Vec3::Zero(), g_va = Vec3::Zero();
    Vec3 g_ub = Vec3::Zero(), g_vb = Vec3::Zero();
    Branch branch = Branch::Direct;
};

inline Branch pick_branch(double direct, double swapped) {
    return swapped < direct - kBranchTieTolerance ? Branch::Swapped : Branch::Direct;
}

/// Alignment, normal, regularization and conjugacy terms of one face.
/// Gradients are pre-scaled by weight / m and accumulated in that order.
inline FaceOut face_terms(const Context& ctx, int f) {
    FaceOut out;
    const Vec3& u = ctx.field->u[f];
    const Vec3& v = ctx.field->v[f];
    const Vec3& n = ctx.geom->face_normals[f];
    const double inv_m = 1.0 / static_cast<double>(ctx.field->size());
    const bool grad = ctx.want_gradient;

    if (ctx.gt) {
        const Vec3 a = n.cross(ctx.gt->u[f].normalized());
        const Vec3 b = n.cross(ctx.gt->v[f].normalized());
        const double ua = u.dot(a), vb = v.dot(b), ub = u.dot(b), va = v.dot(a);
        const double direct = ua * ua + vb * vb;
        const double swapped = ub * ub + va * va;
        out.branch = pick_branch(direct, swapped);
        if (out.branch == Branch::Direct) {
            out.values.align = direct;
            if (grad) {
                out.gu += (2.0 * ua * inv_m) * a;
                out.gv += (2.0 * vb * inv_m) * b;
            }
        } else {
            out.values.align = swapped;
            if (grad) {
                out.gu += (2.0 * ub * inv_m) * b;
                out.gv += (2.0 * va * inv_m) * a;
            }
        }
    }

    {
        const double un = u.dot(n), vn = v.dot(n);
        out.values.normal = un * un + vn * vn;
        if (grad) {
            const double s = 2.0 * ctx.weights.normal * inv_m;
            out.gu += (s * un) * n;
            out.gv += (s * vn) * n;
        }
    }

    const double lu = u.norm(), lv = v.norm();
    {
        out.values.reg = (lu - 1.0) * (lu - 1.0) + (lv - 1.0) * (lv - 1.0);
        if (grad) {
            const double s = 2.0 * ctx.weights.reg * inv_m;
            if (lu > 0.0) out.gu += (s * (lu - 1.0) / lu) * u;
            if (lv > 0.0) out.gv += (s * (lv - 1.0) / lv) * v;
        }
    }

    if (ctx.frame) {
        if (lu <= 0.0 || lv <= 0.0) {
            out.zero_vector = true;
            return out;
        }
        const FrameEntry& fr = (*ctx.frame)[f];
        const Vec3 uh = u / lu, vh = v / lv;
        const Vec3 Au = fr.k1 * uh.dot(fr.d1) * fr.d1 + fr.k2 * uh.dot(fr.d2) * fr.d2;
        const Vec3 Av = fr.k1 * vh.dot(fr.d1) * fr.d1 + fr.k2 * vh.dot(fr.d2) * fr.d2;
        const double r = uh.dot(Av);
        out.values.conj = r * r;
        if (grad) {
            const double s = 2.0 * ctx.weights.conj * inv_m * r;
            out.gu += (s / lu) * (Av - r * uh);
            out.gv += (s / lv) * (Au - r * vh);
        }
    }
    return out;
}

/// Smoothness of one adjacency pair; gradients scaled by weight / |N|.
inline PairOut pair_term(const Context& ctx, int p) {
    PairOut out;
    const auto& pr = ctx.geom->adjacency.pairs[p];
    const Mat3& R = ctx.geom->transport[p];
    const Vec3& nb = ctx.geom->face_normals[pr.face_b];
    const Vec3 wu = R * ctx.field->u[pr.face_a];
    const Vec3 wv = R * ctx.field->v[pr.face_a];
    const Vec3 pu = nb.cross(ctx.field->u[pr.face_b]);
    const Vec3 pv = nb.cross(ctx.field->v[pr.face_b]);

    const double s1 = wu.dot(pu), s2 = wv.dot(pv);
    const double t1 = wu.dot(pv), t2 = wv.dot(pu);
    const double direct = s1 * s1 + s2 * s2;
    const double swapped = t1 * t1 + t2 * t2;
    out.branch = pick_branch(direct, swapped);
    out.value = out.branch == Branch::Direct ? direct : swapped;
    if (!ctx.want_gradient) return out;

    const double scale = 2.0 * ctx.weights.smooth / static_cast<double>(ctx.geom->adjacency.pairs.size());
    const Vec3 wu_n = wu.cross(nb);
    const Vec3 wv_n = wv.cross(nb);
    if (out.branch == Branch::Direct) {
        out.g_ua = (scale * s1) * (R.transpose() * pu);
        out.g_va = (scale * s2) * (R.transpose() * pv);
        out.g_ub = (scale * s1) * wu_n;
        out.g_vb = (scale * s2) * wv_n;
    } else {
        out.g_ua = (scale * t1) * (R.transpose() * pv);
        out.g_va = (scale * t2) * (R.transpose() * pu);
        out.g_vb = (scale * t1) * wu_n;
        out.g_ub = (scale * t2) * wv_n;
    }
    return out;
}

/// Stroke-consistency term; strokes are few, so both backends share this
/// sequential pass. Returns the unweighted L_dc and adds weighted gradients.
double stroke_term(const Context& ctx, FieldGradient* grad);

/// Means of the accumulated sums and the weighted total.
EnergyBreakdown assemble(const Context& ctx, const FaceValues& sums, double smooth_sum, double stroke_value);

}  // namespace cdf::kernels

namespace cdf::kernels::serial {
EnergyBreakdown evaluate(const Context& ctx, FieldGradient* grad, std::vector<Branch>* face_branches,
                         std::vector<Branch>* pair_branches);
}

namespace cdf::kernels::omp {
EnergyBreakdown evaluate(const Context& ctx, FieldGradient* grad, std::vector<Branch>* face_branches,
                         std::vector<Branch>* pair_branches);
}
