#include "cdf/geometry.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace cdf {

Mat3 hinge_rotation(const Vec3& from_normal, const Vec3& to_normal, const Vec3& edge_dir) {
    const double angle = std::atan2(from_normal.cross(to_normal).dot(edge_dir), from_normal.dot(to_normal));
    return Eigen::AngleAxisd(angle, edge_dir).toRotationMatrix();
}

SurfaceGeometry SurfaceGeometry::build(TriMesh mesh) {
    SurfaceGeometry g;
    g.mesh = std::move(mesh);
    g.face_normals = cdf::face_normals(g.mesh);
    g.vertex_normals = cdf::vertex_normals(g.mesh);
    g.adjacency = cdf::adjacency(g.mesh);
    g.topology = build_topology(g.mesh, g.adjacency);

    const auto& pairs = g.adjacency.pairs;
    g.transport.resize(pairs.size());
    g.face_pairs.assign(static_cast<std::size_t>(g.mesh.face_count()), {});
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& pr = pairs[p];
        const Vec3 edge = (g.mesh.positions[pr.edge_v1] - g.mesh.positions[pr.edge_v0]).normalized();
        g.transport[p] = hinge_rotation(g.face_normals[pr.face_a], g.face_normals[pr.face_b], edge);
        g.face_pairs[pr.face_a].push_back(static_cast<int>(p));
        g.face_pairs[pr.face_b].push_back(static_cast<int>(p));
    }
    return g;
}

Mat3 SurfaceGeometry::transport_between(int from, int to) const {
    const int local = shared_local_edge(mesh, from, to);
    const int p = local < 0 ? -1 : topology.face_pair[from][local];
    if (p < 0) throw GeometryError(fmt::format("faces {} and {} are not adjacent", from, to));
    return adjacency.pairs[p].face_a == from ? transport[p] : Mat3(transport[p].transpose());
}

Vec3 barycentric(const TriMesh& mesh, int face, const Vec3& p) {
    const auto& t = mesh.triangles[face];
    const Vec3& a = mesh.positions[t[0]];
    const Vec3 e0 = mesh.positions[t[1]] - a;
    const Vec3 e1 = mesh.positions[t[2]] - a;
    const Vec3 d = p - a;
    const double d00 = e0.dot(e0), d01 = e0.dot(e1), d11 = e1.dot(e1);
    const double d20 = d.dot(e0), d21 = d.dot(e1);
    const double denom = d00 * d11 - d01 * d01;
    const double b1 = (d11 * d20 - d01 * d21) / denom;
    const double b2 = (d00 * d21 - d01 * d20) / denom;
    return {1.0 - b1 - b2, b1, b2};
}

Vec3 closest_point_on_face(const TriMesh& mesh, int face, const Vec3& p) {
    // Region classification on the triangle (Ericson, Real-Time Collision Detection 5.1.5).
    const auto& t = mesh.triangles[face];
    const Vec3& a = mesh.positions[t[0]];
    const Vec3& b = mesh.positions[t[1]];
    const Vec3& c = mesh.positions[t[2]];
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

SurfacePoint closest_surface_point(const TriMesh& mesh, const Vec3& p) {
    SurfacePoint best;
    best.distance = std::numeric_limits<double>::infinity();
    for (int f = 0; f < mesh.face_count(); ++f) {
        const Vec3 q = closest_point_on_face(mesh, f, p);
        const double d = (q - p).norm();
        if (d < best.distance) {
            best = {f, q, d};
        }
    }
    return best;
}

}  // namespace cdf
