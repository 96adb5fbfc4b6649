#pragma once

#include "cdf/field.hpp"
#include "cdf/quad.hpp"
#include "cdf/stroke_types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cdf {

/// Angle between the lines spanned by a and b, in radians, in [0, pi/2].
double line_angle(const Vec3& a, const Vec3& b);

/// Length-weighted mean over stroke segments of the smaller line angle
/// between the segment and u or v of its face, in degrees.
double stroke_deviation(const DirectionField& field, const StrokeAssignment& assignment);

/// Mean over faces of the best-correspondence average line angle between the
/// two fields, in degrees.
double gt_closeness(const DirectionField& field, const DirectionField& gt);

struct EvalReport {
    std::string name;
    double delta = 0.0;
    double theta = 0.0;
    int singularities = 0;
    std::optional<PlanarityReport> planarity_before;
    std::optional<PlanarityReport> planarity_after;
};

/// δ against the strokes, θ against gt and the singularity count of `field`.
EvalReport evaluate(const SurfaceGeometry& geom, const DirectionField& gt, const StrokeAssignment& strokes,
                    const DirectionField& field);

/// Header plus one row per report: name, eta_mean/eta_max before and after,
/// delta, theta, singularities. Missing planarity prints as empty cells.
std::string eval_csv(const std::vector<EvalReport>& reports);

}  // namespace cdf
