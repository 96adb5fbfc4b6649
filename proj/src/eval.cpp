#include "cdf/eval.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace cdf {

namespace {
constexpr double kDeg = 180.0 / std::numbers::pi;
}

double line_angle(const Vec3& a, const Vec3& b) {
    // atan2 form: exact zero for identical inputs, accurate near 0 and pi/2.
    return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

double stroke_deviation(const DirectionField& field, const StrokeAssignment& assignment) {
    double weighted = 0.0, total = 0.0;
    for (const auto& stroke : assignment.strokes) {
        for (const auto& seg : stroke.segments) {
            if (seg.face < 0 || seg.face >= field.size())
                throw GeometryError(fmt::format("stroke segment face {} out of range", seg.face));
            const Vec3 s = seg.vector();
            const double len = s.norm();
            if (len == 0.0) continue;
            const double angle = std::min(line_angle(field.u[seg.face], s), line_angle(field.v[seg.face], s));
            weighted += len * angle;
            total += len;
        }
    }
    if (total == 0.0) throw Error("stroke deviation needs at least one non-empty stroke segment");
    return weighted / total * kDeg;
}

double gt_closeness(const DirectionField& field, const DirectionField& gt) {
    if (field.size() != gt.size()) throw GeometryError(fmt::format("fields differ in size ({} vs {})", field.size(), gt.size()));
    if (field.size() == 0) throw Error("gt closeness of an empty field");
    double sum = 0.0;
    for (int f = 0; f < field.size(); ++f) {
        const double direct = 0.5 * (line_angle(field.u[f], gt.u[f]) + line_angle(field.v[f], gt.v[f]));
        const double swapped = 0.5 * (line_angle(field.u[f], gt.v[f]) + line_angle(field.v[f], gt.u[f]));
        sum += std::min(direct, swapped);
    }
    return sum / field.size() * kDeg;
}

EvalReport evaluate(const SurfaceGeometry& geom, const DirectionField& gt, const StrokeAssignment& strokes,
                    const DirectionField& field) {
    if (field.size() != geom.face_count()) throw GeometryError("field size does not match mesh");
    EvalReport r;
    r.delta = stroke_deviation(field, strokes);
    r.theta = gt_closeness(field, gt);
    r.singularities = singularity_indices(field, geom).count();
    return r;
}

std::string eval_csv(const std::vector<EvalReport>& reports) {
    std::string out = "name,eta_mean_before,eta_max_before,eta_mean_after,eta_max_after,delta,theta,singularities\n";
    auto cell = [](const std::optional<PlanarityReport>& p, bool mean) {
        return p ? fmt::format("{:.17g}", mean ? p->mean : p->max) : std::string();
    };
    for (const auto& r : reports) {
        out += fmt::format("{},{},{},{},{},{:.17g},{:.17g},{}\n", r.name, cell(r.planarity_before, true),
                           cell(r.planarity_before, false), cell(r.planarity_after, true),
                           cell(r.planarity_after, false), r.delta, r.theta, r.singularities);
    }
    return out;
}

}  // namespace cdf
