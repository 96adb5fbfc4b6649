#include "cdf/quad.hpp"
#include "cdf/log.hpp"
#include "cdf/strokes.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace cdf {

void validate(const QuadMesh& quad) {
    const int n = quad.vertex_count();
    for (int q = 0; q < quad.quad_count(); ++q) {
        const auto& f = quad.quads[q];
        for (int i = 0; i < 4; ++i) {
            if (f[i] < 0 || f[i] >= n) throw GeometryError(fmt::format("quad {} references vertex {} out of range", q, f[i]));
            for (int j = 0; j < i; ++j)
                if (f[i] == f[j]) throw GeometryError(fmt::format("quad {} repeats vertex {}", q, f[i]));
        }
        double edges = 0.0;
        for (int i = 0; i < 4; ++i) edges += (quad.positions[f[(i + 1) % 4]] - quad.positions[f[i]]).norm();
        if (!(edges > 0.0)) throw GeometryError(fmt::format("quad {} is degenerate", q));
    }
}

std::string save_quad_obj(const QuadMesh& quad) {
    std::string out;
    for (const auto& p : quad.positions) out += fmt::format("v {:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), p.z());
    for (const auto& q : quad.quads) out += fmt::format("f {} {} {} {}\n", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1);
    return out;
}

QuadMesh load_quad_obj(std::string_view text) {
    QuadMesh quad;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x() >> p.y() >> p.z())) throw ParseError(fmt::format("line {}: invalid number", line_no));
            quad.positions.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                int v = 0;
                const auto end = tok.data() + tok.size();
                const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
                if (ec != std::errc() || (ptr != end && *ptr != '/'))
                    throw ParseError(fmt::format("line {}: invalid index '{}'", line_no, tok));
                idx.push_back(v < 0 ? quad.vertex_count() + v : v - 1);
            }
            if (idx.size() != 4) throw ParseError(fmt::format("line {}: face is not a quad", line_no));
            quad.quads.push_back({idx[0], idx[1], idx[2], idx[3]});
        }
    }
    validate(quad);
    return quad;
}

QuadMesh load_quad_obj_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("{}: cannot open", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return load_quad_obj(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
    // Closest points of two segments (Ericson, Real-Time Collision Detection 5.1.9).
    const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
    const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    constexpr double tiny = 1e-300;
    double s = 0.0, t = 0.0;
    if (a <= tiny && e <= tiny) return r.norm();
    if (a <= tiny) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= tiny) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

double quad_eta(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const double edges = 0.25 * ((b - a).norm() + (c - b).norm() + (d - c).norm() + (a - d).norm());
    if (!(edges > 0.0)) throw GeometryError("degenerate quad: zero average edge length");
    return segment_distance(a, c, b, d) / edges;
}

PlanarityReport planarity(const QuadMesh& quad, Backend backend) {
    PlanarityReport r;
    const int m = quad.quad_count();
    r.eta.assign(static_cast<std::size_t>(m), 0.0);
    bool degenerate = false;
    const bool parallel = backend == Backend::Parallel;
#pragma omp parallel for schedule(static) if (parallel)
    for (int q = 0; q < m; ++q) {
        const auto& f = quad.quads[q];
        const auto& P = quad.positions;
        const double edges = 0.25 * ((P[f[1]] - P[f[0]]).norm() + (P[f[2]] - P[f[1]]).norm() +
                                     (P[f[3]] - P[f[2]]).norm() + (P[f[0]] - P[f[3]]).norm());
        if (!(edges > 0.0)) {
#pragma omp atomic write
            degenerate = true;
            continue;
        }
        r.eta[q] = segment_distance(P[f[0]], P[f[2]], P[f[1]], P[f[3]]) / edges;
    }
    if (degenerate) throw GeometryError("degenerate quad: zero average edge length");
    for (double e : r.eta) {
        r.mean += e;
        r.max = std::max(r.max, e);
    }
    if (m > 0) r.mean /= m;
    return r;
}

namespace {

struct Csr {
    std::vector<int> offsets;
    std::vector<int> items;
};

template <std::size_t K>
Csr incidence(int vertices, const std::vector<std::array<int, K>>& cells) {
    Csr c;
    c.offsets.assign(static_cast<std::size_t>(vertices) + 1, 0);
    for (const auto& cell : cells)
        for (int v : cell) ++c.offsets[v + 1];
    for (int v = 0; v < vertices; ++v) c.offsets[v + 1] += c.offsets[v];
    c.items.resize(static_cast<std::size_t>(c.offsets.back()));
    std::vector<int> fill(c.offsets.begin(), c.offsets.end() - 1);
    for (int i = 0; i < static_cast<int>(cells.size()); ++i)
        for (int v : cells[i]) c.items[fill[v]++] = i;
    return c;
}

// Hill-climbs over vertex-adjacent faces from `face` toward the closest face.
int local_closest_face(const TriMesh& mesh, const Csr& vf, int face, const Vec3& p) {
    double best = (closest_point_on_face(mesh, face, p) - p).squaredNorm();
    for (int step = 0; step < 256; ++step) {
        int next = face;
        for (int v : mesh.triangles[face]) {
            for (int k = vf.offsets[v]; k < vf.offsets[v + 1]; ++k) {
                const int g = vf.items[k];
                const double d = (closest_point_on_face(mesh, g, p) - p).squaredNorm();
                if (d < best || (d == best && g < next)) {
                    best = d;
                    next = g;
                }
            }
        }
        if (next == face) break;
        face = next;
    }
    return face;
}

}  // namespace

PlanarizeResult planarize(const QuadMesh& quad, const TriMesh* reference, const PlanarizeConfig& config,
                          Backend backend) {
    validate(quad);
    if (config.iters < 0) throw Error("planarize: iters must be >= 0");
    if (config.damping < 0.0 || config.damping > 1.0) throw Error("planarize: damping must lie in [0, 1]");
    if (config.w_ref < 0.0 || config.w_ref > 1.0) throw Error("planarize: w_ref must lie in [0, 1]");

    PlanarizeResult result;
    result.quad = quad;
    result.before = planarity(quad, backend);
    auto& P = result.quad.positions;
    const int n = result.quad.vertex_count();
    const int m = result.quad.quad_count();
    const bool parallel = backend == Backend::Parallel;

    const Csr vq = incidence(n, result.quad.quads);
    // Slot of vertex v inside quad q, for gathering projected copies.
    std::vector<std::array<Vec3, 4>> projected(static_cast<std::size_t>(m));

    Csr ref_vf;
    std::vector<int> ref_face;
    if (reference) {
        ref_vf = incidence(reference->vertex_count(), reference->triangles);
        ref_face.assign(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(static) if (parallel)
        for (int v = 0; v < n; ++v) ref_face[v] = closest_surface_point(*reference, P[v]).face;
    }

    for (int it = 0; it < config.iters; ++it) {
#pragma omp parallel for schedule(static) if (parallel)
        for (int q = 0; q < m; ++q) {
            const auto& f = result.quad.quads[q];
            Vec3 c = Vec3::Zero();
            for (int v : f) c += P[v];
            c /= 4.0;
            Mat3 cov = Mat3::Zero();
            for (int v : f) cov += (P[v] - c) * (P[v] - c).transpose();
            const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
            const Vec3 nrm = eig.eigenvectors().col(0);
            for (int i = 0; i < 4; ++i) projected[q][i] = P[f[i]] - (P[f[i]] - c).dot(nrm) * nrm;
        }
        std::vector<Vec3> next(P);
#pragma omp parallel for schedule(static) if (parallel)
        for (int v = 0; v < n; ++v) {
            const int begin = vq.offsets[v], end = vq.offsets[v + 1];
            if (begin == end) continue;
            Vec3 avg = Vec3::Zero();
            for (int k = begin; k < end; ++k) {
                const int q = vq.items[k];
                const auto& f = result.quad.quads[q];
                const int slot = static_cast<int>(std::find(f.begin(), f.end(), v) - f.begin());
                avg += projected[q][slot];
            }
            avg /= static_cast<double>(end - begin);
            Vec3 x = (1.0 - config.damping) * P[v] + config.damping * avg;
            if (reference) {
                ref_face[v] = local_closest_face(*reference, ref_vf, ref_face[v], x);
                x = (1.0 - config.w_ref) * x + config.w_ref * closest_point_on_face(*reference, ref_face[v], x);
            }
            next[v] = x;
        }
        P.swap(next);
    }
    result.after = planarity(result.quad, backend);
    return result;
}

namespace {

struct Located {
    Vec3 point;
    int face;
};

// Points at arc lengths 0, h, 2h, ... along a traced stroke.
std::vector<Located> sample_arc(const Stroke& s, double h) {
    std::vector<Located> out;
    if (s.points.empty()) return out;
    out.push_back({s.points[0], s.faces[0]});
    double next = h, walked = 0.0;
    for (std::size_t i = 1; i < s.points.size(); ++i) {
        const Vec3 a = s.points[i - 1], b = s.points[i];
        const double len = (b - a).norm();
        while (len > 0.0 && next <= walked + len) {
            const double t = (next - walked) / len;
            out.push_back({a + t * (b - a), s.faces[i - 1]});
            next += h;
        }
        walked += len;
    }
    return out;
}

// Unit direction of the stroke near its sample at arc length s.
Vec3 tangent_at(const Stroke& st, double s) {
    double walked = 0.0;
    for (std::size_t i = 1; i < st.points.size(); ++i) {
        const Vec3 d = st.points[i] - st.points[i - 1];
        const double len = d.norm();
        if (len > 0.0 && walked + len >= s) return d / len;
        walked += len;
    }
    for (std::size_t i = st.points.size(); i-- > 1;) {
        const Vec3 d = st.points[i] - st.points[i - 1];
        if (d.norm() > 0.0) return d.normalized();
    }
    return Vec3::Zero();
}

}  // namespace

QuadMesh trace_quad_layout(const DirectionField& field, const SurfaceGeometry& geom, double spacing) {
    if (!(spacing > 0.0)) throw Error("quad spacing must be > 0");
    const TriMesh& mesh = geom.mesh;
    if (field.size() != mesh.face_count()) throw GeometryError("field size does not match mesh");

    int boundary_edges = 0;
    for (const auto& fp : geom.topology.face_pair)
        for (int p : fp)
            if (p < 0) ++boundary_edges;
    const int euler = mesh.vertex_count() - (static_cast<int>(geom.adjacency.pairs.size()) + boundary_edges) +
                      mesh.face_count();
    if (boundary_edges == 0 || euler != 1) throw GeometryError("quad layout needs a disk-topology patch");

    const auto sing = singularity_indices(field, geom);
    if (sing.count() > 0) {
        std::string list;
        for (const auto& s : sing.singularities) list += fmt::format("{}{} ({:+g})", list.empty() ? "" : ", ", s.vertex, s.index());
        throw GeometryError(fmt::format("field has {} singular vertices: {}", sing.count(), list));
    }

    Vec3 centroid = Vec3::Zero();
    for (const auto& p : mesh.positions) centroid += p;
    centroid /= mesh.vertex_count();
    const SurfacePoint center = closest_surface_point(mesh, centroid);

    const TraceConfig cfg{4.0 * bounding_box_diagonal(mesh), 50 * mesh.face_count()};
    const Stroke spine_fwd = trace_streamline(field, geom, center.face, center.point, Family::V, +1, cfg);
    const Stroke spine_bwd = trace_streamline(field, geom, center.face, center.point, Family::V, -1, cfg);
    if (spine_fwd.length() + spine_bwd.length() < spacing) throw GeometryError("spine streamline exits immediately");

    struct Seed {
        Located at;
        Vec3 spine_dir;
    };
    std::map<int, Seed> seeds;  // row index -> seed
    {
        const auto fwd = sample_arc(spine_fwd, spacing);
        for (std::size_t j = 0; j < fwd.size(); ++j)
            seeds[static_cast<int>(j)] = {fwd[j], tangent_at(spine_fwd, j * spacing)};
        const auto bwd = sample_arc(spine_bwd, spacing);
        for (std::size_t j = 1; j < bwd.size(); ++j)
            seeds[-static_cast<int>(j)] = {bwd[j], -tangent_at(spine_bwd, j * spacing)};
    }

    std::map<std::pair<int, int>, int> index;
    QuadMesh quad;
    Vec3 row0_dir = Vec3::Zero();
    Vec3 row0_spine = Vec3::Zero();
    int row0_face = center.face;

    auto trace_row = [&](int row, const Vec3& ref) -> Vec3 {
        const Seed& seed = seeds.at(row);
        const int f = seed.at.face;
        const Vec3 u = field.u[f].normalized(), v = field.v[f].normalized();
        const bool use_u = std::abs(u.dot(seed.spine_dir)) <= std::abs(v.dot(seed.spine_dir));
        const Vec3 dir = use_u ? u : v;
        const int sign = ref.squaredNorm() == 0.0 || dir.dot(ref) >= 0.0 ? 1 : -1;
        const Family fam = use_u ? Family::U : Family::V;
        const Stroke fwd = trace_streamline(field, geom, f, seed.at.point, fam, sign, cfg);
        const Stroke bwd = trace_streamline(field, geom, f, seed.at.point, fam, -sign, cfg);
        const auto fs = sample_arc(fwd, spacing);
        const auto bs = sample_arc(bwd, spacing);
        for (std::size_t k = 0; k < fs.size(); ++k) {
            index[{row, static_cast<int>(k)}] = quad.vertex_count();
            quad.positions.push_back(fs[k].point);
        }
        for (std::size_t k = 1; k < bs.size(); ++k) {
            index[{row, -static_cast<int>(k)}] = quad.vertex_count();
            quad.positions.push_back(bs[k].point);
        }
        return sign * dir;
    };

    row0_dir = trace_row(0, Vec3::Zero());
    row0_spine = seeds.at(0).spine_dir;
    row0_face = seeds.at(0).at.face;
    Vec3 ref = row0_dir;
    for (auto it = seeds.upper_bound(0); it != seeds.end(); ++it) ref = trace_row(it->first, ref);
    ref = row0_dir;
    for (auto it = std::make_reverse_iterator(seeds.lower_bound(0)); it != seeds.rend(); ++it)
        ref = trace_row(it->first, ref);

    const bool flip = geom.face_normals[row0_face].dot(row0_dir.cross(row0_spine)) < 0.0;
    for (const auto& [key, a] : index) {
        const auto [row, col] = key;
        const auto b = index.find({row, col + 1});
        const auto c = index.find({row + 1, col + 1});
        const auto d = index.find({row + 1, col});
        if (b == index.end() || c == index.end() || d == index.end()) continue;
        if (flip)
            quad.quads.push_back({a, d->second, c->second, b->second});
        else
            quad.quads.push_back({a, b->second, c->second, d->second});
    }

    // Keep only vertices used by some quad.
    std::vector<int> remap(quad.positions.size(), -1);
    QuadMesh out;
    for (auto& q : quad.quads)
        for (int& v : q) {
            if (remap[v] < 0) {
                remap[v] = out.vertex_count();
                out.positions.push_back(quad.positions[v]);
            }
            v = remap[v];
        }
    out.quads = std::move(quad.quads);
    if (out.quads.empty()) throw GeometryError("quad layout produced no quads");
    log().debug("trace_quad_layout: {} rows, {} quads", seeds.size(), out.quad_count());
    return out;
}

}  // namespace cdf
