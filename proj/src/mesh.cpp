#include "cdf/mesh.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace cdf {

namespace {

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

Vec3 raw_face_normal(const TriMesh& mesh, int f) {
    const auto& t = mesh.triangles[f];
    const Vec3& a = mesh.positions[t[0]];
    const Vec3& b = mesh.positions[t[1]];
    const Vec3& c = mesh.positions[t[2]];
    return (b - a).cross(c - a);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line) {
    double value = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(value))
        throw ParseError(fmt::format("line {}: invalid number '{}'", line, tok));
    return value;
}

int parse_index(std::string_view tok, std::size_t line, int vertex_count) {
    const auto slash = tok.find('/');
    if (slash != std::string_view::npos) tok = tok.substr(0, slash);
    long value = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || value == 0)
        throw ParseError(fmt::format("line {}: invalid vertex index '{}'", line, tok));
    const long idx = value > 0 ? value - 1 : vertex_count + value;
    if (idx < 0 || idx >= vertex_count)
        throw ParseError(fmt::format("line {}: vertex index {} out of range", line, value));
    return static_cast<int>(idx);
}

}  // namespace

double bounding_box_diagonal(const TriMesh& mesh) {
    if (mesh.positions.empty()) return 0.0;
    Vec3 lo = mesh.positions.front(), hi = lo;
    for (const auto& p : mesh.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

double face_area(const TriMesh& mesh, int face) { return 0.5 * raw_face_normal(mesh, face).norm(); }

Vec3 face_centroid(const TriMesh& mesh, int face) {
    const auto& t = mesh.triangles[face];
    return (mesh.positions[t[0]] + mesh.positions[t[1]] +
            mesh.positions[t[2]]) /
           3.0;
}

double mean_edge_length(const TriMesh& mesh) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : mesh.triangles) {
        for (int i = 0; i < 3; ++i) {
            sum += (mesh.positions[t[i]] -
                    mesh.positions[t[(i + 1) % 3]])
                       .norm();
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

void validate(const TriMesh& mesh) {
    const int n = mesh.vertex_count();
    if (mesh.triangles.empty()) throw GeometryError("mesh has no faces");
    for (const auto& p : mesh.positions)
        if (!p.allFinite()) throw GeometryError("non-finite vertex position");

    const double diag = bounding_box_diagonal(mesh);
    const double min_area = 1e-12 * diag * diag;
    std::map<std::uint64_t, int> edge_faces;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.triangles[f];
        for (int i = 0; i < 3; ++i)
            if (t[i] < 0 || t[i] >= n) throw GeometryError(fmt::format("face {} references invalid vertex {}", f, t[i]));
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw GeometryError(fmt::format("face {} repeats a vertex", f));
        if (face_area(mesh, f) <= min_area) throw GeometryError(fmt::format("degenerate face {}", f));
        for (int i = 0; i < 3; ++i) {
            const int count = ++edge_faces[edge_key(t[i], t[(i + 1) % 3])];
            if (count > 2)
                throw GeometryError(fmt::format("non-manifold edge ({}, {})", std::min(t[i], t[(i + 1) % 3]),
                                                std::max(t[i], t[(i + 1) % 3])));
        }
    }
}

TriMesh load_mesh(std::string_view text) {
    TriMesh mesh;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    struct FaceRecord {
        std::size_t line;
        int vertices_so_far;
        std::vector<std::string_view> tokens;
    };
    std::vector<FaceRecord> faces;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        const auto raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        auto line = trim(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        const auto tokens = split_ws(line);
        if (tokens[0] == "v") {
            if (tokens.size() < 4) throw ParseError(fmt::format("line {}: vertex needs three coordinates", line_no));
            mesh.positions.emplace_back(parse_double(tokens[1], line_no), parse_double(tokens[2], line_no),
                                        parse_double(tokens[3], line_no));
        } else if (tokens[0] == "f") {
            if (tokens.size() != 4) {
                if (tokens.size() > 4) throw ParseError(fmt::format("line {}: non-triangular face", line_no));
                throw ParseError(fmt::format("line {}: face needs three vertices", line_no));
            }
            faces.push_back({line_no, mesh.vertex_count(), {tokens.begin() + 1, tokens.end()}});
        }
        // vn, vt, o, g, s, usemtl, mtllib: ignored
    }
    for (const auto& rec : faces) {
        Triangle t{};
        for (int i = 0; i < 3; ++i) {
            // Negative indices count back from the vertices defined so far.
            int idx = parse_index(rec.tokens[i], rec.line, mesh.vertex_count());
            if (rec.tokens[i].front() == '-') idx -= mesh.vertex_count() - rec.vertices_so_far;
            if (idx < 0) throw ParseError(fmt::format("line {}: vertex index out of range", rec.line));
            t[i] = idx;
        }
        mesh.triangles.push_back(t);
    }
    validate(mesh);
    return mesh;
}

TriMesh load_mesh_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open mesh file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return load_mesh(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.filename().string(), e.what()));
    }
}

std::string save_mesh(const TriMesh& mesh) {
    std::string out;
    out.reserve(mesh.positions.size() * 64 + mesh.triangles.size() * 24);
    for (const auto& p : mesh.positions) out += fmt::format("v {:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), p.z());
    for (const auto& t : mesh.triangles) out += fmt::format("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1);
    return out;
}

void save_mesh_file(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write mesh file '{}'", path.string()));
    out << save_mesh(mesh);
}

std::vector<Vec3> face_normals(const TriMesh& mesh) {
    std::vector<Vec3> normals(static_cast<std::size_t>(mesh.face_count()));
    bool degenerate = false;
#pragma omp parallel for schedule(static)
    for (int f = 0; f < mesh.face_count(); ++f) {
        const Vec3 n = raw_face_normal(mesh, f);
        const double len = n.norm();
        if (len <= 0.0) {
#pragma omp atomic write
            degenerate = true;
            normals[f] = Vec3::Zero();
        } else {
            normals[f] = n / len;
        }
    }
    if (degenerate) throw GeometryError("degenerate face has no normal");
    return normals;
}

namespace {

// Gathers `contribution(face, corner)` per vertex over incident faces in
// ascending face order so the sum does not depend on scheduling.
template <class Contribution>
std::vector<Vec3> gather_vertex_normals(const TriMesh& mesh, Contribution contribution) {
    const int n = mesh.vertex_count();
    std::vector<int> offsets(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& t : mesh.triangles)
        for (int v : t) ++offsets[static_cast<std::size_t>(v) + 1];
    for (int i = 0; i < n; ++i) offsets[static_cast<std::size_t>(i) + 1] += offsets[i];
    std::vector<std::pair<int, int>> incident(static_cast<std::size_t>(offsets.back()));
    std::vector<int> fill(offsets.begin(), offsets.end() - 1);
    for (int f = 0; f < mesh.face_count(); ++f)
        for (int c = 0; c < 3; ++c) incident[fill[static_cast<std::size_t>(mesh.triangles[f][c])]++] = {f, c};

    std::vector<Vec3> normals(static_cast<std::size_t>(n));
    int isolated = -1;
#pragma omp parallel for schedule(static)
    for (int v = 0; v < n; ++v) {
        Vec3 sum = Vec3::Zero();
        for (int k = offsets[v]; k < offsets[static_cast<std::size_t>(v) + 1]; ++k)
            sum += contribution(incident[k].first, incident[k].second);
        const double len = sum.norm();
        if (len <= 0.0) {
#pragma omp critical
            isolated = isolated < 0 ? v : std::min(isolated, v);
            normals[v] = Vec3::Zero();
        } else {
            normals[v] = sum / len;
        }
    }
    if (isolated >= 0) throw GeometryError(fmt::format("vertex {} has no incident faces", isolated));
    return normals;
}

}  // namespace

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
    return gather_vertex_normals(mesh, [&](int f, int) { return raw_face_normal(mesh, f); });
}

std::vector<Vec3> curvature_normals(const TriMesh& mesh) {
    return gather_vertex_normals(mesh, [&](int f, int c) {
        const auto& t = mesh.triangles[f];
        const Vec3 a = mesh.positions[t[(c + 1) % 3]] - mesh.positions[t[c]];
        const Vec3 b = mesh.positions[t[(c + 2) % 3]] - mesh.positions[t[c]];
        return Vec3(a.cross(b) / (a.squaredNorm() * b.squaredNorm()));
    });
}

std::pair<TriMesh, NormalizeTransform> pca_normalize(const TriMesh& mesh) {
    const int n = mesh.vertex_count();
    if (n < 4) throw GeometryError("PCA normalization needs at least 4 vertices");

    Vec3 centroid = Vec3::Zero();
    for (const auto& p : mesh.positions) centroid += p;
    centroid /= static_cast<double>(n);

    Mat3 cov = Mat3::Zero();
    for (const auto& p : mesh.positions) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 evals = eig.eigenvalues();  // ascending
    if (!(evals(2) > 0.0) || evals(1) <= 1e-12 * evals(2))
        throw GeometryError("rank-deficient covariance: vertices are collinear");

    Vec3 farthest = Vec3::Zero();
    double best = -1.0;
    for (const auto& p : mesh.positions) {
        const double d = (p - centroid).squaredNorm();
        if (d > best) {
            best = d;
            farthest = p - centroid;
        }
    }

    auto orient = [&](Vec3 axis, int global) {
        const double dot = axis.dot(farthest);
        const double tie = 1e-12 * std::sqrt(best);
        if (dot < -tie || (std::abs(dot) <= tie && axis(global) < 0.0)) axis = -axis;
        return axis;
    };
    const Vec3 a0 = orient(eig.eigenvectors().col(2), 0);
    const Vec3 a1 = orient(eig.eigenvectors().col(1), 1);
    const Vec3 a2 = a0.cross(a1).normalized();  // keeps det(R) = +1

    NormalizeTransform xf;
    xf.rotation.row(0) = a0.transpose();
    xf.rotation.row(1) = a1.transpose();
    xf.rotation.row(2) = a2.transpose();

    double radius = 0.0;
    for (const auto& p : mesh.positions) radius = std::max(radius, (xf.rotation * (p - centroid)).norm());
    xf.scale = 1.0 / radius;
    xf.translation = -xf.scale * (xf.rotation * centroid);

    TriMesh out;
    out.triangles = mesh.triangles;
    out.positions.reserve(static_cast<std::size_t>(n));
    for (const auto& p : mesh.positions) out.positions.push_back(xf.scale * (xf.rotation * (p - centroid)));
    return {std::move(out), xf};
}

FaceAdjacency adjacency(const TriMesh& mesh) {
    struct EdgeUse {
        int faces[2] = {-1, -1};
        int count = 0;
    };
    std::map<std::uint64_t, EdgeUse> edges;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.triangles[f];
        for (int i = 0; i < 3; ++i) {
            auto& e = edges[edge_key(t[i], t[(i + 1) % 3])];
            if (e.count >= 2)
                throw GeometryError(fmt::format("non-manifold edge ({}, {})", std::min(t[i], t[(i + 1) % 3]),
                                                std::max(t[i], t[(i + 1) % 3])));
            e.faces[e.count++] = f;
        }
    }
    FaceAdjacency adj;
    for (const auto& [key, e] : edges) {
        if (e.count != 2) continue;
        AdjacentPair p;
        p.face_a = std::min(e.faces[0], e.faces[1]);
        p.face_b = std::max(e.faces[0], e.faces[1]);
        p.edge_v0 = static_cast<int>(key >> 32);
        p.edge_v1 = static_cast<int>(key & 0xffffffffu);
        adj.pairs.push_back(p);
    }
    std::sort(adj.pairs.begin(), adj.pairs.end(), [](const AdjacentPair& x, const AdjacentPair& y) {
        return std::tie(x.face_a, x.face_b) < std::tie(y.face_a, y.face_b);
    });
    return adj;
}

int shared_local_edge(const TriMesh& mesh, int face, int other) {
    const auto& t = mesh.triangles[face];
    const auto& o = mesh.triangles[other];
    auto has = [&](int v) { return v == o[0] || v == o[1] || v == o[2]; };
    for (int i = 0; i < 3; ++i)
        if (has(t[(i + 1) % 3]) && has(t[(i + 2) % 3])) return i;
    return -1;
}

MeshTopology build_topology(const TriMesh& mesh, const FaceAdjacency& adj) {
    MeshTopology topo;
    const auto m = static_cast<std::size_t>(mesh.face_count());
    topo.face_neighbors.assign(m, {-1, -1, -1});
    topo.face_pair.assign(m, {-1, -1, -1});
    for (int p = 0; p < static_cast<int>(adj.pairs.size()); ++p) {
        const auto& pr = adj.pairs[p];
        const int ea = shared_local_edge(mesh, pr.face_a, pr.face_b);
        const int eb = shared_local_edge(mesh, pr.face_b, pr.face_a);
        topo.face_neighbors[pr.face_a][ea] = pr.face_b;
        topo.face_neighbors[pr.face_b][eb] = pr.face_a;
        topo.face_pair[pr.face_a][ea] = p;
        topo.face_pair[pr.face_b][eb] = p;
    }
    topo.boundary_vertex.assign(static_cast<std::size_t>(mesh.vertex_count()), false);
    topo.vertex_faces.assign(static_cast<std::size_t>(mesh.vertex_count()), {});
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.triangles[f];
        for (int i = 0; i < 3; ++i) {
            topo.vertex_faces[t[i]].push_back(f);
            if (topo.face_neighbors[f][i] < 0) {
                topo.boundary_vertex[t[(i + 1) % 3]] = true;
                topo.boundary_vertex[t[(i + 2) % 3]] = true;
            }
        }
    }
    return topo;
}

}  // namespace cdf
