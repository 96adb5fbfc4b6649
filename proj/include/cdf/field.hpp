#pragma once

#include "cdf/curvature.hpp"
#include "cdf/geometry.hpp"

#include <vector>

namespace cdf {

/// Per-face vector pair (u_j, v_j). `tangent_valid` is set by
/// project_tangent() and cleared by anything that writes raw vectors.
struct DirectionField {
    std::vector<Vec3> u;
    std::vector<Vec3> v;
    bool tangent_valid = false;

    DirectionField() = default;
    explicit DirectionField(int faces)
        : u(static_cast<std::size_t>(faces), Vec3::Zero()),
          v(static_cast<std::size_t>(faces), Vec3::Zero()) {}

    int size() const { return static_cast<int>(u.size()); }
};

/// normal x vec; the normal component of vec drops out.
inline Vec3 rotate90(const Vec3& vec, const Vec3& normal) { return normal.cross(vec); }

/// Hinge-map transport of a tangent vector across the edge shared by two
/// faces. Throws GeometryError when the faces are not adjacent.
Vec3 parallel_transport(const Vec3& vec, int from_face, int to_face, const TriMesh& mesh);

/// k1 (u.d1)(v.d1) + k2 (u.d2)(v.d2) with u, v normalized.
double conjugacy_residual(const Vec3& u, const Vec3& v, const FrameEntry& frame);
std::vector<double> conjugacy_residual(const DirectionField& field, const CurvatureFrame& frame);

struct ConjugateResult {
    Vec3 v;
    /// |u x v| < 1e-3: u is close to an asymptotic direction.
    bool degenerate = false;
};

/// Unit tangent v with zero conjugacy residual against unit tangent u. The
/// face normal is taken as d1 x d2.
ConjugateResult conjugate_direction(const Vec3& u, const FrameEntry& frame);

/// Removes normal components and renormalizes; throws on vectors parallel
/// to the normal.
DirectionField project_tangent(const DirectionField& field, const SurfaceGeometry& geom);

struct Singularity {
    int vertex = -1;
    int quarter_turns = 0;  // index = quarter_turns / 4

    double index() const { return quarter_turns / 4.0; }
};

struct SingularityReport {
    std::vector<Singularity> singularities;

    int count() const { return static_cast<int>(singularities.size()); }
};

/// Index of the matched frame field at every interior vertex, rounded to
/// quarter turns; only nonzero entries are reported.
SingularityReport singularity_indices(const DirectionField& field, const SurfaceGeometry& geom);

}  // namespace cdf
