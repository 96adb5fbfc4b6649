#include "cdf/field.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace cdf {

Vec3 parallel_transport(const Vec3& vec, int from_face, int to_face, const TriMesh& mesh) {
    const int local = shared_local_edge(mesh, from_face, to_face);
    if (from_face == to_face || local < 0)
        throw GeometryError(fmt::format("faces {} and {} are not adjacent", from_face, to_face));
    const auto& t = mesh.triangles[from_face];
    const Vec3 edge = (mesh.positions[t[(local + 2) % 3]] - mesh.positions[t[(local + 1) % 3]]).normalized();
    auto normal = [&](int f) {
        const auto& tri = mesh.triangles[f];
        return Vec3((mesh.positions[tri[1]] - mesh.positions[tri[0]])
                        .cross(mesh.positions[tri[2]] - mesh.positions[tri[0]])
                        .normalized());
    };
    return hinge_rotation(normal(from_face), normal(to_face), edge) * vec;
}

double conjugacy_residual(const Vec3& u, const Vec3& v, const FrameEntry& frame) {
    const double nu = u.norm(), nv = v.norm();
    if (nu <= 0.0 || nv <= 0.0) throw GeometryError("conjugacy residual of a zero vector");
    const Vec3 uh = u / nu, vh = v / nv;
    return frame.k1 * uh.dot(frame.d1) * vh.dot(frame.d1) + frame.k2 * uh.dot(frame.d2) * vh.dot(frame.d2);
}

std::vector<double> conjugacy_residual(const DirectionField& field, const CurvatureFrame& frame) {
    if (field.size() != frame.size()) throw GeometryError("field and frame sizes differ");
    std::vector<double> r(static_cast<std::size_t>(field.size()));
    for (int f = 0; f < field.size(); ++f) r[f] = conjugacy_residual(field.u[f], field.v[f], frame[f]);
    return r;
}

ConjugateResult conjugate_direction(const Vec3& u, const FrameEntry& frame) {
    const Vec3 normal = frame.d1.cross(frame.d2);
    const double c = u.dot(frame.d1);
    const double s = u.dot(frame.d2);
    Vec3 v = (-frame.k2 * s) * frame.d1 + (frame.k1 * c) * frame.d2;
    // Snapped umbilic frames have k1 == k2 exactly, so the tolerance here only
    // catches those; near-umbilic raw frames take the closed form.
    if (v.norm() < 1e-12 || is_umbilic(frame, 1e-12)) {
        v = rotate90(u, normal);
    }
    v.normalize();
    return {v, u.cross(v).norm() < 1e-3};
}

DirectionField project_tangent(const DirectionField& field, const SurfaceGeometry& geom) {
    if (field.size() != geom.face_count()) throw GeometryError("field size does not match mesh");
    DirectionField out(field.size());
    for (int f = 0; f < field.size(); ++f) {
        const Vec3& n = geom.face_normals[f];
        auto project = [&](const Vec3& x, const char* which) {
            const Vec3 t = x - x.dot(n) * n;
            const double len = t.norm();
            if (!(len > 1e-12)) throw GeometryError(fmt::format("face {}: {} is parallel to the normal", f, which));
            return Vec3(t / len);
        };
        out.u[f] = project(field.u[f], "u");
        out.v[f] = project(field.v[f], "v");
    }
    out.tangent_valid = true;
    return out;
}

namespace {

double line_angle(const Vec3& a, const Vec3& b) {
    return std::acos(std::min(1.0, std::abs(a.dot(b))));
}

// Walks the one-ring of an interior vertex counter-clockwise, carrying one
// field vector across each edge and snapping it to the best matched vector
// on the far side. Returns the accumulated residual rotation, or NaN when
// the ring does not close.
double ring_rotation(const DirectionField& field, const SurfaceGeometry& geom, int vertex, double& angle_sum) {
    const auto& mesh = geom.mesh;
    const auto& faces = geom.topology.vertex_faces[vertex];
    const int start = faces.front();

    auto unit = [](const Vec3& x) { return Vec3(x.normalized()); };
    int family = 0;  // 0: u, 1: v
    double sign = 1.0;
    auto rep = [&](int f, int fam, double sg) { return Vec3(sg * unit(fam == 0 ? field.u[f] : field.v[f])); };

    double rotation = 0.0;
    angle_sum = 0.0;
    int face = start;
    for (std::size_t step = 0; step <= faces.size(); ++step) {
        const auto& t = mesh.triangles[face];
        const int local = t[0] == vertex ? 0 : (t[1] == vertex ? 1 : 2);
        const Vec3& p = mesh.positions[vertex];
        const Vec3 a = mesh.positions[t[(local + 1) % 3]] - p;
        const Vec3 b = mesh.positions[t[(local + 2) % 3]] - p;
        angle_sum += std::atan2(a.cross(b).norm(), a.dot(b));

        const int next = geom.topology.face_neighbors[face][(local + 1) % 3];
        if (next < 0) return std::numeric_limits<double>::quiet_NaN();

        const Mat3 T = geom.transport_between(face, next);
        const Vec3 tu = T * unit(field.u[face]);
        const Vec3 tv = T * unit(field.v[face]);
        const Vec3 nu = unit(field.u[next]);
        const Vec3 nv = unit(field.v[next]);
        const double direct = std::pow(line_angle(tu, nu), 2) + std::pow(line_angle(tv, nv), 2);
        const double swapped = std::pow(line_angle(tu, nv), 2) + std::pow(line_angle(tv, nu), 2);
        const bool swap = swapped < direct;

        const Vec3 carried = T * rep(face, family, sign);
        const int next_family = swap ? 1 - family : family;
        const Vec3 target_unsigned = next_family == 0 ? nu : nv;
        const double next_sign = carried.dot(target_unsigned) >= 0.0 ? 1.0 : -1.0;
        const Vec3 target = rep(next, next_family, next_sign);
        const Vec3& n = geom.face_normals[next];
        rotation += std::atan2(n.dot(carried.cross(target)), carried.dot(target));

        family = next_family;
        sign = next_sign;
        face = next;
        if (face == start) return rotation;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

SingularityReport singularity_indices(const DirectionField& field, const SurfaceGeometry& geom) {
    if (field.size() != geom.face_count()) throw GeometryError("field size does not match mesh");
    for (int f = 0; f < field.size(); ++f)
        if (field.u[f].norm() <= 0.0 || field.v[f].norm() <= 0.0)
            throw GeometryError(fmt::format("face {}: zero-length field vector", f));

    const int n = geom.vertex_count();
    std::vector<int> quarters(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(dynamic, 64)
    for (int v = 0; v < n; ++v) {
        if (geom.topology.boundary_vertex[v] || geom.topology.vertex_faces[v].empty()) continue;
        double angle_sum = 0.0;
        const double rotation = ring_rotation(field, geom, v, angle_sum);
        if (std::isnan(rotation)) continue;
        const double defect = 2.0 * std::numbers::pi - angle_sum;
        const double index = (rotation + defect) / (2.0 * std::numbers::pi);
        quarters[v] = static_cast<int>(std::lround(4.0 * index));
    }

    SingularityReport report;
    for (int v = 0; v < n; ++v)
        if (quarters[v] != 0) report.singularities.push_back({v, quarters[v]});
    return report;
}

}  // namespace cdf
