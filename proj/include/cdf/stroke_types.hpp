#pragma once

#include "cdf/types.hpp"

#include <vector>

namespace cdf {

using Polyline = std::vector<Vec3>;

/// Curve on the surface; faces[i] is the face containing points[i]. For a
/// traced streamline, faces[i] is the face the path runs through after
/// points[i].
struct Stroke {
    enum class Stop { None, Boundary, MaxLength, MaxSegments, Loop, Stuck };

    std::vector<Vec3> points;
    std::vector<int> faces;
    Stop stop = Stop::None;

    double length() const;
};

/// Straight piece of a stroke inside one face.
struct StrokeSegment {
    int face = -1;
    Vec3 start = Vec3::Zero();
    Vec3 end = Vec3::Zero();

    Vec3 vector() const { return end - start; }
};

struct AssignedStroke {
    std::vector<StrokeSegment> segments;
    /// Distinct faces touched by the stroke, in first-visit order.
    std::vector<int> faces;
};

/// Stroke segments grouped by stroke; faces[i] of each entry forms the set
/// the stroke-consistency term averages over.
struct StrokeAssignment {
    std::vector<AssignedStroke> strokes;

    bool empty() const { return strokes.empty(); }
    int segment_count() const;
};

/// Per-vertex closest stroke sample and the projection vector to it.
struct StrokeFeatures {
    std::vector<Vec3> closest;     // p*_i
    std::vector<Vec3> projection;  // l_i = p*_i - p_i
    bool empty_strokes = false;
};

}  // namespace cdf
