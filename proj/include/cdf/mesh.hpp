#pragma once

#include "cdf/types.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cdf {

using Triangle = std::array<int, 3>;

/// Reference surface. Invariants (checked by validate()): every triangle
/// has three distinct in-range indices and non-vanishing area, and every
/// edge has at most two incident faces.
struct TriMesh {
    std::vector<Vec3> positions;
    std::vector<Triangle> triangles;

    int vertex_count() const { return static_cast<int>(positions.size()); }
    int face_count() const { return static_cast<int>(triangles.size()); }
};

/// Throws GeometryError on the first violated invariant.
void validate(const TriMesh& mesh);

/// Parses OBJ text (v/f records, 1-based or negative indices, `a/b/c`
/// vertex references). Faces with more than three indices are rejected.
TriMesh load_mesh(std::string_view obj_text);
TriMesh load_mesh_file(const std::filesystem::path& path);

/// OBJ text with round-trip precision.
std::string save_mesh(const TriMesh& mesh);
void save_mesh_file(const TriMesh& mesh, const std::filesystem::path& path);

double bounding_box_diagonal(const TriMesh& mesh);
double face_area(const TriMesh& mesh, int face);
double mean_edge_length(const TriMesh& mesh);
Vec3 face_centroid(const TriMesh& mesh, int face);

/// Unit normals, right-hand rule on the vertex order.
std::vector<Vec3> face_normals(const TriMesh& mesh);

/// Area-weighted average of incident face normals, normalized.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

/// Vertex normals with Max's weights (corner cross product over the squared
/// edge lengths), exact for vertices on a sphere. Used for curvature fitting.
std::vector<Vec3> curvature_normals(const TriMesh& mesh);

/// Maps input coordinates to the normalized frame: p' = scale * R * p + t.
struct NormalizeTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

/// Centers the vertex set, aligns its principal axes (descending variance)
/// with x, y, z and scales it into the unit sphere.
std::pair<TriMesh, NormalizeTransform> pca_normalize(const TriMesh& mesh);

/// Two faces sharing an interior edge. face_a < face_b; the edge is given
/// by its endpoint vertex indices.
struct AdjacentPair {
    int face_a = -1;
    int face_b = -1;
    int edge_v0 = -1;
    int edge_v1 = -1;
};

struct FaceAdjacency {
    std::vector<AdjacentPair> pairs;  // sorted by (face_a, face_b)
};

FaceAdjacency adjacency(const TriMesh& mesh);

/// Per-face and per-vertex connectivity used by tracing and the index
/// computation. Local edge i of a face is the edge opposite its vertex i.
struct MeshTopology {
    std::vector<std::array<int, 3>> face_neighbors;  // -1 on the boundary
    std::vector<std::array<int, 3>> face_pair;       // adjacency pair index, -1 on the boundary
    std::vector<bool> boundary_vertex;
    std::vector<std::vector<int>> vertex_faces;      // ascending face order
};

MeshTopology build_topology(const TriMesh& mesh, const FaceAdjacency& adj);

/// Local edge of `face` shared with `other`, or -1.
int shared_local_edge(const TriMesh& mesh, int face, int other);

}  // namespace cdf
