#include "cdf/solver.hpp"
#include "cdf/log.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace cdf {

void SolverConfig::validate() const {
    if (max_iters < 1) throw Error("solver: max_iters must be >= 1");
    if (!(step_size > 0.0)) throw Error("solver: step_size must be > 0");
    if (!(tolerance > 0.0) || !(epsilon > 0.0)) throw Error("solver: tolerances must be > 0");
    if (window < 1 || renormalize_every < 1) throw Error("solver: window and renormalize_every must be >= 1");
    if (ramp_fraction < 0.0 || ramp_fraction > 1.0) throw Error("solver: ramp_fraction must lie in [0, 1]");
    const auto& w = weights;
    if (w.normal < 0 || w.smooth < 0 || w.stroke < 0 || w.reg < 0 || w.conj < 0 || conj_initial < 0 || conj_final < 0)
        throw Error("solver: weights must be nonnegative");
}

std::vector<Anchor> sample_anchors(const SurfaceGeometry& geom, const CurvatureFrame& frame, int count, Rng& rng) {
    if (count < 1 || count > 5) throw Error(fmt::format("anchor count {} outside [1, 5]", count));
    const int m = geom.face_count();
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) order[i] = i;
    // Partial Fisher-Yates: faces are visited in uniformly random order.
    std::vector<Anchor> anchors;
    for (int i = 0; i < m && static_cast<int>(anchors.size()) < count; ++i) {
        const int j = rng.uniform_int(i, m - 1);
        std::swap(order[i], order[j]);
        const int f = order[i];
        const FrameEntry& fr = frame[f];
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Vec3 u = (std::cos(phi) * fr.d1 + std::sin(phi) * fr.d2).normalized();
        const ConjugateResult c = conjugate_direction(u, fr);
        if (c.degenerate) continue;
        anchors.push_back({f, u, c.v});
    }
    if (static_cast<int>(anchors.size()) < count)
        throw GeometryError(fmt::format("only {} non-degenerate anchor faces available, {} requested",
                                        anchors.size(), count));
    return anchors;
}

DirectionField init_field(const SurfaceGeometry& geom, const CurvatureFrame& frame, std::span<const Anchor> anchors,
                          Rng& rng, const StrokeAssignment* strokes) {
    const int m = geom.face_count();
    DirectionField field(m);
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    std::vector<bool> fixed(static_cast<std::size_t>(m), false);
    std::deque<int> queue;
    for (const auto& a : anchors) {
        if (a.face < 0 || a.face >= m) throw GeometryError(fmt::format("anchor face {} out of range", a.face));
        if (seen[a.face]) continue;
        seen[a.face] = fixed[a.face] = true;
        field.u[a.face] = a.u;
        field.v[a.face] = a.v;
        queue.push_back(a.face);
    }
    if (strokes) {
        for (const auto& stroke : strokes->strokes) {
            for (const auto& seg : stroke.segments) {
                const int f = seg.face;
                if (seen[f]) continue;
                const Vec3& n = geom.face_normals[f];
                Vec3 u = seg.vector() - seg.vector().dot(n) * n;
                if (u.norm() < 1e-12) continue;
                u.normalize();
                seen[f] = true;
                field.u[f] = u;
                field.v[f] = conjugate_direction(u, frame[f]).v;
                queue.push_back(f);
            }
        }
    }

    auto propagate = [&] {
        while (!queue.empty()) {
            const int f = queue.front();
            queue.pop_front();
            for (int nb : geom.topology.face_neighbors[f]) {
                if (nb < 0 || seen[nb]) continue;
                seen[nb] = true;
                const Mat3 T = geom.transport_between(f, nb);
                field.u[nb] = T * field.u[f];
                field.v[nb] = T * field.v[f];
                queue.push_back(nb);
            }
        }
    };
    propagate();
    // Components without an anchor start from a random direction at their
    // lowest-index face.
    for (int f = 0; f < m; ++f) {
        if (seen[f]) continue;
        const FrameEntry& fr = frame[f];
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        field.u[f] = std::cos(phi) * fr.d1 + std::sin(phi) * fr.d2;
        field.v[f] = conjugate_direction(field.u[f], fr).v;
        seen[f] = true;
        queue.push_back(f);
        propagate();
    }

    for (int f = 0; f < m; ++f) {
        if (fixed[f]) continue;
        const Vec3& n = geom.face_normals[f];
        Vec3 u = field.u[f] - field.u[f].dot(n) * n;
        if (u.norm() < 1e-12) u = frame[f].d1;
        u.normalize();
        Vec3 v = conjugate_direction(u, frame[f]).v;
        if (v.dot(field.v[f]) < 0.0) v = -v;
        field.u[f] = u;
        field.v[f] = v;
    }
    field.tangent_valid = true;
    return field;
}

namespace {

double conj_weight(const SolverConfig& c, int iter) {
    const double ramp_iters = c.ramp_fraction * c.max_iters;
    if (ramp_iters <= 0.0 || iter >= ramp_iters) return c.conj_final;
    return c.conj_initial + (c.conj_final - c.conj_initial) * (iter / ramp_iters);
}

void renormalize(DirectionField& field, const SurfaceGeometry& geom, const std::vector<bool>& fixed) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < field.size(); ++f) {
        if (fixed[f]) continue;
        const Vec3& n = geom.face_normals[f];
        for (Vec3* x : {&field.u[f], &field.v[f]}) {
            const Vec3 t = *x - x->dot(n) * n;
            if (t.norm() > 1e-12) *x = t.normalized();
        }
    }
}

}  // namespace

void project_conjugate(DirectionField& field, const CurvatureFrame& frame, const std::vector<bool>& fixed) {
#pragma omp parallel for schedule(static)
    for (int f = 0; f < field.size(); ++f) {
        if (!fixed.empty() && fixed[f]) continue;
        const Vec3 u = field.u[f].normalized(), v = field.v[f].normalized();
        Vec3 cu = conjugate_direction(u, frame[f]).v;
        Vec3 cv = conjugate_direction(v, frame[f]).v;
        if (cu.dot(v) < 0.0) cu = -cu;
        if (cv.dot(u) < 0.0) cv = -cv;
        const double move_v = std::acos(std::min(1.0, cu.dot(v)));
        const double move_u = std::acos(std::min(1.0, cv.dot(u)));
        if (move_v <= move_u) {
            field.u[f] = u;
            field.v[f] = cu;
        } else {
            field.u[f] = cv;
            field.v[f] = v;
        }
    }
}

SolveResult solve_cdf(const SurfaceGeometry& geom, const CurvatureFrame& frame, std::span<const Anchor> anchors,
                      const StrokeAssignment* strokes, const SolverConfig& config) {
    config.validate();
    const bool has_strokes = strokes && !strokes->empty();
    if (anchors.empty() && !has_strokes && !config.allow_unconstrained)
        throw Error("solve_cdf: no anchors or strokes given (set allow_unconstrained for a free smooth field)");
    const int m = geom.face_count();
    if (frame.size() != m) throw GeometryError("curvature frame does not match mesh");

    Rng rng(config.seed);
    SolveResult result;
    result.field = init_field(geom, frame, anchors, rng, strokes);
    DirectionField& field = result.field;

    std::vector<bool> fixed(static_cast<std::size_t>(m), false);
    for (const auto& a : anchors) fixed[a.face] = true;

    EnergyInputs in{&geom, &frame, nullptr, strokes};
    FieldGradient grad(m);
    std::vector<Vec3> mu(static_cast<std::size_t>(m), Vec3::Zero()), mv = mu, su = mu, sv = mu;
    const double b1 = config.beta1, b2 = config.beta2;
    const int ramp_end = static_cast<int>(std::ceil(config.ramp_fraction * config.max_iters));

    for (int it = 0; it < config.max_iters; ++it) {
        EnergyWeights w = config.weights;
        w.conj = conj_weight(config, it);
        const EnergyBreakdown e = total_gradient(field, in, w, grad, config.backend);
        if (!std::isfinite(e.total)) throw NumericalError(fmt::format("solver: non-finite energy at iteration {}", it));
        result.trace.push_back(e);
        result.iterations = it + 1;

        // Energies before the end of the ramp use a smaller conjugacy weight
        // and are not comparable.
        if (it >= ramp_end) {
            bool stop = e.total <= 1e-14;
            if (!stop && it >= ramp_end + config.window) {
                const double prev = result.trace[static_cast<std::size_t>(it - config.window)].total;
                stop = (prev - e.total) / std::max(std::abs(prev), 1e-300) < config.tolerance;
            }
            if (stop) {
                result.converged = true;
                break;
            }
        }

        const double c1 = 1.0 - std::pow(b1, it + 1);
        const double c2 = 1.0 - std::pow(b2, it + 1);
        const double lr = config.step_size;
        const double eps = config.epsilon;
#pragma omp parallel for schedule(static)
        for (int f = 0; f < m; ++f) {
            if (fixed[f]) continue;
            auto step = [&](Vec3& x, Vec3& mom, Vec3& sec, const Vec3& g) {
                mom = b1 * mom + (1.0 - b1) * g;
                sec = b2 * sec + (1.0 - b2) * g.cwiseProduct(g);
                const Vec3 mhat = mom / c1;
                const Vec3 shat = sec / c2;
                x -= lr * mhat.cwiseQuotient((shat.cwiseSqrt().array() + eps).matrix());
            };
            step(field.u[f], mu[f], su[f], grad.du[f]);
            step(field.v[f], mv[f], sv[f], grad.dv[f]);
        }
        if ((it + 1) % config.renormalize_every == 0) renormalize(field, geom, fixed);
    }

    renormalize(field, geom, fixed);
    if (config.project_conjugate) project_conjugate(field, frame, fixed);
    for (const auto& a : anchors) {
        field.u[a.face] = a.u;
        field.v[a.face] = a.v;
    }
    field.tangent_valid = true;
    log().debug("solve_cdf: {} iterations, converged={}, final total {:.3e}", result.iterations, result.converged,
                result.trace.back().total);
    return result;
}

}  // namespace cdf
