#include "cdf/strokes.hpp"
#include "cdf/log.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cdf {

double Stroke::length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
    return len;
}

int StrokeAssignment::segment_count() const {
    int n = 0;
    for (const auto& s : strokes) n += static_cast<int>(s.segments.size());
    return n;
}

namespace {

struct Exit {
    double t = std::numeric_limits<double>::infinity();
    int edge = -1;  // local edge, opposite vertex `edge`
};

// First parameter t >= 0 at which p + t d leaves the face.
Exit face_exit(const TriMesh& mesh, int face, const Vec3& p, const Vec3& d) {
    const Vec3 b = barycentric(mesh, face, p);
    const Vec3 db = barycentric(mesh, face, p + d) - b;
    Exit e;
    for (int i = 0; i < 3; ++i) {
        if (db[i] >= -1e-15) continue;
        const double t = std::max(0.0, b[i]) / -db[i];
        if (t < e.t) {
            e.t = t;
            e.edge = i;
        }
    }
    return e;
}

Vec3 unit_or_throw(const Vec3& x, int face) {
    const double n = x.norm();
    if (!(n > 0.0)) throw GeometryError(fmt::format("face {}: zero field vector", face));
    return x / n;
}

}  // namespace

Stroke trace_streamline(const DirectionField& field, const SurfaceGeometry& geom, int start_face,
                        const Vec3& start_point, Family family, int sign, const TraceConfig& config) {
    const TriMesh& mesh = geom.mesh;
    const int m = mesh.face_count();
    if (field.size() != m) throw GeometryError("field size does not match mesh");
    if (start_face < 0 || start_face >= m) throw GeometryError(fmt::format("start face {} out of range", start_face));
    {
        const Vec3 b = barycentric(mesh, start_face, start_point);
        const Vec3& n = geom.face_normals[start_face];
        const double off_plane = std::abs((start_point - mesh.positions[mesh.triangles[start_face][0]]).dot(n));
        if (b.minCoeff() < -1e-6 || off_plane > 1e-6 * std::max(1.0, std::sqrt(face_area(mesh, start_face))))
            throw GeometryError(fmt::format("start point is not inside face {}", start_face));
    }
    const double eps = 1e-12 * std::max(1.0, mean_edge_length(mesh));
    const double cos_loop = std::cos(std::numbers::pi / 180.0);

    auto family_vec = [&](int f, Family fam) {
        return unit_or_throw(fam == Family::U ? field.u[f] : field.v[f], f);
    };

    Stroke s;
    s.points.push_back(start_point);
    s.faces.push_back(start_face);
    int f = start_face;
    Vec3 p = start_point;
    Vec3 d = (sign < 0 ? -1.0 : 1.0) * family_vec(f, family);
    std::vector<std::vector<Vec3>> visits(static_cast<std::size_t>(m));
    visits[f].push_back(d);
    double length = 0.0;
    int segments = 0;

    while (true) {
        if (segments >= config.max_segments) {
            s.stop = Stroke::Stop::MaxSegments;
            break;
        }
        const Exit e = face_exit(mesh, f, p, d);
        if (e.edge < 0) {
            s.stop = Stroke::Stop::Stuck;
            break;
        }
        const double remaining = config.max_length - length;
        if (e.t >= remaining) {
            if (remaining > eps) {
                s.points.push_back(p + remaining * d);
                s.faces.push_back(f);
            }
            s.stop = Stroke::Stop::MaxLength;
            break;
        }
        const Vec3 q = p + e.t * d;
        const int nb = geom.topology.face_neighbors[f][e.edge];
        ++segments;
        if (e.t > eps) {
            s.points.push_back(q);
            s.faces.push_back(nb >= 0 ? nb : f);
            length += e.t;
        } else if (nb >= 0) {
            s.faces.back() = nb;
        }
        if (nb < 0) {
            s.stop = Stroke::Stop::Boundary;
            break;
        }

        const Vec3 incoming = geom.transport_between(f, nb) * d;
        const Vec3 cu = family_vec(nb, Family::U), cv = family_vec(nb, Family::V);
        const Vec3 candidates[4] = {cu, -cu, cv, -cv};
        int best = 0;
        for (int c = 1; c < 4; ++c)
            if (candidates[c].dot(incoming) > candidates[best].dot(incoming)) best = c;
        const Vec3 next = candidates[best];

        bool loop = false;
        for (const Vec3& prev : visits[nb])
            if (prev.dot(next) >= cos_loop) loop = true;
        if (loop) {
            s.stop = Stroke::Stop::Loop;
            break;
        }
        visits[nb].push_back(next);
        f = nb;
        p = q;
        d = next;
    }
    return s;
}

Stroke trace_both_ways(const DirectionField& field, const SurfaceGeometry& geom, int start_face,
                       const Vec3& start_point, Family family, const TraceConfig& config) {
    Stroke forward = trace_streamline(field, geom, start_face, start_point, family, +1, config);
    if (forward.stop == Stroke::Stop::Loop) return forward;
    const Stroke backward = trace_streamline(field, geom, start_face, start_point, family, -1, config);

    // Reversed, segment i of the backward path runs through backward.faces[k-1-i].
    Stroke joined;
    const std::size_t k = backward.points.size() - 1;
    for (std::size_t i = 0; i < k; ++i) {
        joined.points.push_back(backward.points[k - i]);
        joined.faces.push_back(backward.faces[k - 1 - i]);
    }
    joined.points.insert(joined.points.end(), forward.points.begin(), forward.points.end());
    joined.faces.insert(joined.faces.end(), forward.faces.begin(), forward.faces.end());
    joined.stop = forward.stop;
    return joined;
}

namespace {

// Walks the straight chord p -> q across faces starting in face fp.
void walk_chord(const SurfaceGeometry& geom, Vec3 cur, int f, const Vec3& q, double eps,
                std::vector<StrokeSegment>& out) {
    const TriMesh& mesh = geom.mesh;
    const int max_steps = 4 * mesh.face_count() + 16;
    for (int step = 0; step < max_steps; ++step) {
        const Vec3& n = geom.face_normals[f];
        Vec3 w = q - cur;
        w -= w.dot(n) * n;
        const double dist = w.norm();
        if (dist <= eps) {
            if ((q - cur).norm() > eps) out.push_back({f, cur, q});
            return;
        }
        const Vec3 d = w / dist;
        const Exit e = face_exit(mesh, f, cur, d);
        if (e.edge < 0 || e.t >= dist * (1.0 - 1e-9)) {
            out.push_back({f, cur, q});
            return;
        }
        const Vec3 x = cur + e.t * d;
        if (e.t > eps) out.push_back({f, cur, x});
        const int nb = geom.topology.face_neighbors[f][e.edge];
        if (nb < 0) {
            log().warn("stroke chord leaves the surface at face {}", f);
            if ((q - x).norm() > eps) out.push_back({f, x, q});
            return;
        }
        f = nb;
        cur = x;
    }
    log().warn("stroke chord walk did not reach its end point");
    out.push_back({f, cur, q});
}

}  // namespace

StrokeAssignment assign_segments(const SurfaceGeometry& geom, std::span<const Polyline> strokes) {
    const TriMesh& mesh = geom.mesh;
    const double tol = 1e-4 * bounding_box_diagonal(mesh);
    const double eps = 1e-12 * std::max(1.0, mean_edge_length(mesh));
    StrokeAssignment result;
    for (std::size_t i = 0; i < strokes.size(); ++i) {
        std::vector<SurfacePoint> snapped;
        int dropped = 0;
        for (const Vec3& p : strokes[i]) {
            const SurfacePoint sp = closest_surface_point(mesh, p);
            if (sp.distance > tol) {
                ++dropped;
                continue;
            }
            if (!snapped.empty() && (snapped.back().point - sp.point).norm() <= eps) continue;
            snapped.push_back(sp);
        }
        if (snapped.empty() && !strokes[i].empty())
            throw GeometryError(fmt::format("stroke {} lies entirely off the surface", i));
        if (dropped > 0) log().warn("stroke {}: {} points off the surface were dropped", i, dropped);

        AssignedStroke as;
        for (std::size_t j = 1; j < snapped.size(); ++j)
            walk_chord(geom, snapped[j - 1].point, snapped[j - 1].face, snapped[j].point, eps, as.segments);
        for (const auto& seg : as.segments)
            if (std::find(as.faces.begin(), as.faces.end(), seg.face) == as.faces.end()) as.faces.push_back(seg.face);
        result.strokes.push_back(std::move(as));
    }
    return result;
}

std::vector<Vec3> resample_polyline(const Polyline& line, double spacing) {
    if (!(spacing > 0.0)) throw Error("resample spacing must be > 0");
    std::vector<Vec3> out;
    if (line.empty()) return out;
    for (std::size_t i = 1; i < line.size(); ++i) {
        const Vec3 a = line[i - 1], b = line[i];
        const double len = (b - a).norm();
        if (len == 0.0) continue;
        const int k = std::max(1, static_cast<int>(std::ceil(len / spacing)));
        for (int j = 0; j < k; ++j) out.push_back(a + (static_cast<double>(j) / k) * (b - a));
    }
    out.push_back(line.back());
    return out;
}

StrokeFeatures stroke_projection_features(const TriMesh& mesh, std::span<const Polyline> strokes, Backend backend) {
    const int n = mesh.vertex_count();
    StrokeFeatures out;
    out.closest.assign(static_cast<std::size_t>(n), Vec3::Zero());
    out.projection.assign(static_cast<std::size_t>(n), Vec3::Zero());

    const double spacing = 0.5 * mean_edge_length(mesh);
    std::vector<Vec3> samples;
    for (const auto& line : strokes) {
        const auto r = resample_polyline(line, spacing);
        samples.insert(samples.end(), r.begin(), r.end());
    }
    if (samples.empty()) {
        out.empty_strokes = true;
        out.closest = mesh.positions;
        return out;
    }

    const bool parallel = backend == Backend::Parallel;
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
        const Vec3& p = mesh.positions[i];
        std::size_t best = 0;
        double best_d2 = (samples[0] - p).squaredNorm();
        for (std::size_t s = 1; s < samples.size(); ++s) {
            const double d2 = (samples[s] - p).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = s;
            }
        }
        out.closest[i] = samples[best];
        out.projection[i] = samples[best] - p;
    }
    return out;
}

VertexFeatures build_vertex_features(const TriMesh& mesh, std::span<const Vec3> vertex_normals,
                                     const StrokeFeatures& features) {
    const int n = mesh.vertex_count();
    if (static_cast<int>(vertex_normals.size()) != n || static_cast<int>(features.projection.size()) != n)
        throw GeometryError(fmt::format("feature inputs disagree on vertex count ({}, {}, {})", n,
                                        vertex_normals.size(), features.projection.size()));
    VertexFeatures x(n, 9);
    for (int i = 0; i < n; ++i) {
        x.block<1, 3>(i, 0) = mesh.positions[i].transpose();
        x.block<1, 3>(i, 3) = vertex_normals[i].transpose();
        x.block<1, 3>(i, 6) = features.projection[i].transpose();
    }
    return x;
}

}  // namespace cdf
