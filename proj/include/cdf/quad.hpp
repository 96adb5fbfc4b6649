#pragma once

#include "cdf/field.hpp"
#include "cdf/parallel.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cdf {

/// Quad layout. Cells a tracer could not fill are simply absent from
/// `quads`, so planarization never sees them.
struct QuadMesh {
    std::vector<Vec3> positions;
    std::vector<std::array<int, 4>> quads;

    int vertex_count() const { return static_cast<int>(positions.size()); }
    int quad_count() const { return static_cast<int>(quads.size()); }
};

/// Throws GeometryError on out-of-range or repeated indices and on quads
/// with zero average edge length.
void validate(const QuadMesh& quad);

std::string save_quad_obj(const QuadMesh& quad);
QuadMesh load_quad_obj(std::string_view text);
QuadMesh load_quad_obj_file(const std::filesystem::path& path);

struct PlanarityReport {
    std::vector<double> eta;
    double mean = 0.0;
    double max = 0.0;
};

/// Closest distance between segments [p0, p1] and [q0, q1].
double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

/// Diagonal distance of one quad over its mean edge length.
double quad_eta(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

PlanarityReport planarity(const QuadMesh& quad, Backend backend = Backend::Parallel);

struct PlanarizeConfig {
    int iters = 100;
    double damping = 0.5;
    double w_ref = 0.1;
};

struct PlanarizeResult {
    QuadMesh quad;
    PlanarityReport before;
    PlanarityReport after;
};

PlanarizeResult planarize(const QuadMesh& quad, const TriMesh* reference, const PlanarizeConfig& config,
                          Backend backend = Backend::Parallel);

/// Streamline grid: a spine of family v through the patch centroid, family-u
/// streamlines from seeds spaced `spacing` along it, each sampled every
/// `spacing` of arc length.
QuadMesh trace_quad_layout(const DirectionField& field, const SurfaceGeometry& geom, double spacing);

}  // namespace cdf
