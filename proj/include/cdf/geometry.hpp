#pragma once

#include "cdf/mesh.hpp"

#include <vector>

namespace cdf {

/// Rotation about the unit axis `edge_dir` taking `from_normal` to
/// `to_normal` (the hinge map across a shared edge).
Mat3 hinge_rotation(const Vec3& from_normal, const Vec3& to_normal, const Vec3& edge_dir);

/// Derived per-mesh data shared by the energy, solver, tracer and metrics.
struct SurfaceGeometry {
    TriMesh mesh;
    std::vector<Vec3> face_normals;
    std::vector<Vec3> vertex_normals;
    FaceAdjacency adjacency;
    MeshTopology topology;
    /// transport[p] carries tangent vectors of pairs[p].face_a into face_b.
    std::vector<Mat3> transport;
    /// For every face, the adjacency pair indices touching it, ascending.
    std::vector<std::vector<int>> face_pairs;

    static SurfaceGeometry build(TriMesh mesh);

    int face_count() const { return mesh.face_count(); }
    int vertex_count() const { return mesh.vertex_count(); }

    /// Transport matrix from face `from` into adjacent face `to`.
    Mat3 transport_between(int from, int to) const;
};

/// Barycentric coordinates of `p` projected into the plane of `face`.
Vec3 barycentric(const TriMesh& mesh, int face, const Vec3& p);

/// Closest point on triangle `face` to `p`.
Vec3 closest_point_on_face(const TriMesh& mesh, int face, const Vec3& p);

struct SurfacePoint {
    int face = -1;
    Vec3 point = Vec3::Zero();
    double distance = 0.0;
};

/// Brute-force closest surface point; ties go to the lowest face index.
SurfacePoint closest_surface_point(const TriMesh& mesh, const Vec3& p);

}  // namespace cdf
