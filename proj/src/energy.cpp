#include "cdf/energy.hpp"
#include "cdf/log.hpp"
#include "energy_kernels.hpp"

#include <fmt/format.h>

namespace cdf {

namespace kernels {

double stroke_term(const Context& ctx, FieldGradient* grad) {
    if (!ctx.strokes) return 0.0;
    int active = 0;
    for (const auto& s : ctx.strokes->strokes)
        if (!s.faces.empty()) ++active;
    if (active == 0) return 0.0;

    double total = 0.0;
    for (const auto& stroke : ctx.strokes->strokes) {
        if (stroke.faces.empty()) continue;
        const double faces = static_cast<double>(stroke.faces.size());
        const double weight = ctx.weights.stroke / (static_cast<double>(active) * faces);
        double inner = 0.0;
        for (const auto& seg : stroke.segments) {
            const Vec3 s = seg.vector();
            const double len = s.norm();
            if (len < 1e-14) {
                log().warn("skipping zero-length stroke segment in face {}", seg.face);
                continue;
            }
            const int k = seg.face;
            const Vec3 sp = ctx.geom->face_normals[k].cross(s);
            const double us = ctx.field->u[k].dot(sp);
            const double vs = ctx.field->v[k].dot(sp);
            const Branch br = pick_branch(us * us, vs * vs);
            if (br == Branch::Direct) {
                inner += us * us / len;
                if (grad) grad->du[k] += (2.0 * weight * us / len) * sp;
            } else {
                inner += vs * vs / len;
                if (grad) grad->dv[k] += (2.0 * weight * vs / len) * sp;
            }
        }
        total += inner / faces;
    }
    return total / static_cast<double>(active);
}

EnergyBreakdown assemble(const Context& ctx, const FaceValues& sums, double smooth_sum, double stroke_value) {
    const double m = static_cast<double>(ctx.field->size());
    EnergyBreakdown b;
    b.align_active = ctx.gt != nullptr;
    b.conj_active = ctx.frame != nullptr;
    b.smooth_active = ctx.smooth_active;
    b.stroke_active = ctx.strokes != nullptr && !ctx.strokes->empty();
    b.align = b.align_active ? sums.align / m : 0.0;
    b.normal = sums.normal / m;
    b.reg = sums.reg / m;
    b.conj = b.conj_active ? sums.conj / m : 0.0;
    b.smooth = ctx.smooth_active ? smooth_sum / static_cast<double>(ctx.geom->adjacency.pairs.size()) : 0.0;
    b.stroke = stroke_value;
    const auto& w = ctx.weights;
    b.total = b.align + w.normal * b.normal + w.smooth * b.smooth + w.stroke * b.stroke + w.reg * b.reg +
              w.conj * b.conj;
    return b;
}

}  // namespace kernels

namespace {

void check_sizes(const DirectionField& field, const EnergyInputs& in) {
    if (!in.geom) throw Error("energy evaluation needs surface geometry");
    const int m = in.geom->face_count();
    if (field.size() != m || static_cast<int>(field.v.size()) != m)
        throw GeometryError(fmt::format("field has {} faces, mesh has {}", field.size(), m));
    if (in.gt && (in.gt->size() != m || static_cast<int>(in.gt->v.size()) != m))
        throw GeometryError(fmt::format("ground-truth field has {} faces, mesh has {}", in.gt->size(), m));
    if (in.frame && in.frame->size() != m)
        throw GeometryError(fmt::format("curvature frame has {} faces, mesh has {}", in.frame->size(), m));
}

kernels::Context make_context(const DirectionField& field, const EnergyInputs& in, const EnergyWeights& w,
                              bool gradient) {
    kernels::Context ctx;
    ctx.field = &field;
    ctx.geom = in.geom;
    ctx.frame = in.frame;
    ctx.gt = in.gt;
    ctx.strokes = in.strokes;
    ctx.weights = w;
    ctx.want_gradient = gradient;
    ctx.smooth_active = !in.geom->adjacency.pairs.empty();
    return ctx;
}

EnergyBreakdown run(const kernels::Context& ctx, Backend backend, FieldGradient* grad,
                    std::vector<Branch>* face_branches = nullptr, std::vector<Branch>* pair_branches = nullptr) {
    return backend == Backend::Serial ? kernels::serial::evaluate(ctx, grad, face_branches, pair_branches)
                                      : kernels::omp::evaluate(ctx, grad, face_branches, pair_branches);
}

}  // namespace

AlignmentResult alignment_energy(const DirectionField& field, const DirectionField& gt, const SurfaceGeometry& geom) {
    EnergyInputs in{&geom, nullptr, &gt, nullptr};
    check_sizes(field, in);
    auto ctx = make_context(field, in, {}, false);
    ctx.smooth_active = false;
    AlignmentResult r;
    r.branches.resize(static_cast<std::size_t>(field.size()));
    r.value = run(ctx, Backend::Serial, nullptr, &r.branches).align;
    return r;
}

double normal_consistency(const DirectionField& field, const SurfaceGeometry& geom) {
    EnergyInputs in{&geom};
    check_sizes(field, in);
    auto ctx = make_context(field, in, {}, false);
    ctx.smooth_active = false;
    return run(ctx, Backend::Serial, nullptr).normal;
}

SmoothnessResult smoothness_energy(const DirectionField& field, const SurfaceGeometry& geom) {
    EnergyInputs in{&geom};
    check_sizes(field, in);
    if (geom.adjacency.pairs.empty()) throw GeometryError("smoothness energy needs at least one adjacent face pair");
    auto ctx = make_context(field, in, {}, false);
    SmoothnessResult r;
    r.branches.resize(geom.adjacency.pairs.size());
    r.value = run(ctx, Backend::Serial, nullptr, nullptr, &r.branches).smooth;
    return r;
}

double stroke_consistency(const DirectionField& field, const SurfaceGeometry& geom,
                          const StrokeAssignment& assignment) {
    EnergyInputs in{&geom, nullptr, nullptr, &assignment};
    check_sizes(field, in);
    const auto ctx = make_context(field, in, {}, false);
    return kernels::stroke_term(ctx, nullptr);
}

double regularization(const DirectionField& field) {
    double sum = 0.0;
    for (int f = 0; f < field.size(); ++f) {
        const double lu = field.u[f].norm() - 1.0, lv = field.v[f].norm() - 1.0;
        sum += lu * lu + lv * lv;
    }
    return field.size() ? sum / field.size() : 0.0;
}

double conjugacy_energy(const DirectionField& field, const CurvatureFrame& frame) {
    const auto r = conjugacy_residual(field, frame);
    double sum = 0.0;
    for (double x : r) sum += x * x;
    return r.empty() ? 0.0 : sum / static_cast<double>(r.size());
}

EnergyBreakdown total_energy(const DirectionField& field, const EnergyInputs& in, const EnergyWeights& w,
                             Backend backend) {
    check_sizes(field, in);
    return run(make_context(field, in, w, false), backend, nullptr);
}

EnergyBreakdown total_gradient(const DirectionField& field, const EnergyInputs& in, const EnergyWeights& w,
                               FieldGradient& grad, Backend backend) {
    check_sizes(field, in);
    grad.du.assign(field.u.size(), Vec3::Zero());
    grad.dv.assign(field.v.size(), Vec3::Zero());
    return run(make_context(field, in, w, true), backend, &grad);
}

}  // namespace cdf
