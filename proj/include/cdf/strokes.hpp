#pragma once

#include "cdf/field.hpp"
#include "cdf/parallel.hpp"
#include "cdf/stroke_types.hpp"

#include <Eigen/Core>

#include <span>

namespace cdf {

enum class Family { U, V };

struct TraceConfig {
    double max_length = 1.0;
    int max_segments = 10000;
};

/// Face-exact streamline of one field family. `sign` (+1 or -1) picks the
/// starting orientation.
Stroke trace_streamline(const DirectionField& field, const SurfaceGeometry& geom, int start_face,
                        const Vec3& start_point, Family family, int sign, const TraceConfig& config);

/// Traces both orientations from the same start and joins them into one
/// stroke running from the backward end through the start to the forward end.
Stroke trace_both_ways(const DirectionField& field, const SurfaceGeometry& geom, int start_face,
                       const Vec3& start_point, Family family, const TraceConfig& config);

/// Splits surface polylines into per-face segments.
StrokeAssignment assign_segments(const SurfaceGeometry& geom, std::span<const Polyline> strokes);

/// Polyline resampled so consecutive samples are at most `spacing` apart;
/// original vertices are kept.
std::vector<Vec3> resample_polyline(const Polyline& line, double spacing);

StrokeFeatures stroke_projection_features(const TriMesh& mesh, std::span<const Polyline> strokes,
                                          Backend backend = Backend::Parallel);

using VertexFeatures = Eigen::Matrix<double, Eigen::Dynamic, 9, Eigen::RowMajor>;

/// Rows are (p_i, n_i, l_i).
VertexFeatures build_vertex_features(const TriMesh& mesh, std::span<const Vec3> vertex_normals,
                                     const StrokeFeatures& features);

}  // namespace cdf
