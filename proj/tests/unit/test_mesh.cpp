#include "doctest.h"
#include "fixtures.hpp"

#include "cdf/dataset.hpp"
#include "cdf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace cdf;

namespace {

// Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix; columns of V
// are eigenvectors, values unsorted.
void jacobi(Mat3 A, Vec3& values, Mat3& V) {
    V.setIdentity();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = A(0, 1) * A(0, 1) + A(0, 2) * A(0, 2) + A(1, 2) * A(1, 2);
        if (off < 1e-30) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                Mat3 J = Mat3::Identity();
                J(p, p) = c;
                J(q, q) = c;
                J(p, q) = s;
                J(q, p) = -s;
                A = J.transpose() * A * J;
                V = V * J;
            }
    }
    values = A.diagonal();
}

TriMesh box(double ex, double ey, double ez) {
    TriMesh m;
    for (int i = 0; i < 8; ++i)
        m.positions.push_back({(i & 1 ? 0.5 : -0.5) * ex, (i & 2 ? 0.5 : -0.5) * ey, (i & 4 ? 0.5 : -0.5) * ez});
    m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                   {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return m;
}

}  // namespace

TEST_CASE("load_mesh parses a single triangle") {
    const TriMesh m = load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    CHECK(m.vertex_count() == 3);
    CHECK(m.face_count() == 1);
}

TEST_CASE("load_mesh accepts slash references and negative indices") {
    const TriMesh m = load_mesh("# c\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf -3/1/1 -2//1 -1\n");
    CHECK(m.triangles[0] == Triangle{0, 1, 2});
}

TEST_CASE("load_mesh rejects quads with the line number") {
    try {
        load_mesh("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("non-triangular face") != std::string::npos);
        CHECK(msg.find("line 5") != std::string::npos);
    }
}

TEST_CASE("load_mesh rejects degenerate and non-manifold input") {
    CHECK_THROWS_AS(load_mesh("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n"), GeometryError);
    CHECK_THROWS_AS(load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n"),
                    GeometryError);
    CHECK_THROWS_AS(load_mesh("v 0 0 0\nv 1 0 0\nf 1 2 7\n"), ParseError);
    CHECK_THROWS_AS(load_mesh("v 0 x 0\n"), ParseError);
}

TEST_CASE("sampled patch has 2601 vertices and 5000 faces") {
    Rng rng(3);
    const TriMesh m = sample_patch(gen_patch(rng, {}), 51);
    const TriMesh back = load_mesh(save_mesh(m));
    CHECK(back.vertex_count() == 2601);
    CHECK(back.face_count() == 5000);
}

TEST_CASE("save and load round trip") {
    Rng rng(4);
    TriMesh m = fixtures::saddle(9);
    for (auto& p : m.positions) p += Vec3(rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3), 0.0) / 3.0;
    const TriMesh back = load_mesh(save_mesh(m));
    REQUIRE(back.vertex_count() == m.vertex_count());
    CHECK(back.triangles == m.triangles);
    double err = 0.0;
    for (int i = 0; i < m.vertex_count(); ++i) err = std::max(err, (back.positions[i] - m.positions[i]).norm());
    CHECK(err <= 1e-9);
}

TEST_CASE("face normals") {
    TriMesh tri = load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    CHECK((face_normals(tri)[0] - Vec3(0, 0, 1)).norm() == 0.0);
    std::swap(tri.triangles[0][1], tri.triangles[0][2]);
    CHECK((face_normals(tri)[0] - Vec3(0, 0, -1)).norm() == 0.0);

    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        TriMesh r;
        for (int i = 0; i < 3; ++i) r.positions.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        r.triangles = {{0, 1, 2}};
        const Vec3& a = r.positions[0];
        const Vec3& b = r.positions[1];
        const Vec3& c = r.positions[2];
        const double cx = (b.y() - a.y()) * (c.z() - a.z()) - (b.z() - a.z()) * (c.y() - a.y());
        const double cy = (b.z() - a.z()) * (c.x() - a.x()) - (b.x() - a.x()) * (c.z() - a.z());
        const double cz = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
        const Vec3 oracle = Vec3(cx, cy, cz) / std::sqrt(cx * cx + cy * cy + cz * cz);
        const Vec3 n = face_normals(r)[0];
        CHECK((n - oracle).norm() <= 1e-12);
        TriMesh flipped = r;
        std::swap(flipped.triangles[0][1], flipped.triangles[0][2]);
        CHECK((face_normals(flipped)[0] + n).norm() == 0.0);
    }
}

TEST_CASE("vertex normals") {
    for (const Vec3& n : vertex_normals(fixtures::flat_grid(6, 5))) CHECK(std::abs(std::abs(n.z()) - 1.0) <= 1e-15);

    const TriMesh sphere = fixtures::icosphere(3);
    const auto vn = vertex_normals(sphere);
    double worst = 0.0;
    for (int i = 0; i < sphere.vertex_count(); ++i)
        worst = std::max(worst, std::acos(std::min(1.0, vn[i].dot(sphere.positions[i].normalized()))));
    CHECK(worst * 180.0 / M_PI <= 2.0);

    // Direct area-weighted summation over incident faces.
    const TriMesh s = fixtures::saddle(11);
    const auto got = vertex_normals(s);
    std::vector<Vec3> acc(s.vertex_count(), Vec3::Zero());
    for (const auto& t : s.triangles) {
        const Vec3 c = (s.positions[t[1]] - s.positions[t[0]]).cross(s.positions[t[2]] - s.positions[t[0]]);
        for (int v : t) acc[v] += c;  // |c| = 2 area, direction = normal
    }
    double err = 0.0;
    for (int i = 0; i < s.vertex_count(); ++i) err = std::max(err, (got[i] - acc[i].normalized()).norm());
    CHECK(err <= 1e-12);
}

TEST_CASE("vertex normals reject isolated vertices") {
    TriMesh m = load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    m.positions.push_back({5, 5, 5});
    CHECK_THROWS_AS(vertex_normals(m), GeometryError);
}

TEST_CASE("pca_normalize") {
    Rng rng(11);
    const Mat3 R = fixtures::random_rotation(rng);
    const TriMesh b = fixtures::transformed(box(4, 2, 1), R, Vec3(0.3, -2, 1), 1.7);
    const auto [out, tr] = pca_normalize(b);

    double maxr = 0.0;
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : out.positions) {
        maxr = std::max(maxr, p.norm());
        centroid += p;
    }
    CHECK(std::abs(maxr - 1.0) <= 1e-9);
    CHECK((centroid / out.vertex_count()).norm() <= 1e-12);
    CHECK(std::abs(tr.rotation.determinant() - 1.0) <= 1e-12);
    CHECK((tr.rotation * tr.rotation.transpose() - Mat3::Identity()).norm() <= 1e-12);
    for (int i = 0; i < b.vertex_count(); ++i) CHECK((tr.apply(b.positions[i]) - out.positions[i]).norm() <= 1e-12);

    // Oracle: the dominant covariance eigenvector of the input is the long box axis
    // and must be mapped onto x.
    Vec3 mean = Vec3::Zero();
    for (const auto& p : b.positions) mean += p;
    mean /= b.vertex_count();
    Mat3 C = Mat3::Zero();
    for (const auto& p : b.positions) C += (p - mean) * (p - mean).transpose();
    Vec3 values;
    Mat3 V;
    jacobi(C, values, V);
    int top = 0;
    for (int i = 1; i < 3; ++i)
        if (values[i] > values[top]) top = i;
    CHECK(std::abs(std::abs((tr.rotation * V.col(top)).x()) - 1.0) <= 1e-9);
    Vec3 extent = Vec3::Zero();
    for (const auto& p : out.positions) extent = extent.cwiseMax(p.cwiseAbs());
    CHECK(extent.x() > extent.y());
    CHECK(extent.y() > extent.z());
}

TEST_CASE("pca_normalize is idempotent up to axis signs") {
    Rng rng(12);
    const TriMesh s = sample_patch(gen_patch(rng, {}), 21);
    const TriMesh once = pca_normalize(s).first;
    const TriMesh twice = pca_normalize(once).first;
    bool any = false;
    for (int mask = 0; mask < 8 && !any; ++mask) {
        const Vec3 sign((mask & 1) ? -1 : 1, (mask & 2) ? -1 : 1, (mask & 4) ? -1 : 1);
        double err = 0.0;
        for (int i = 0; i < s.vertex_count(); ++i)
            err = std::max(err, (twice.positions[i] - once.positions[i].cwiseProduct(sign)).norm());
        any = err <= 1e-9;
    }
    CHECK(any);
}

TEST_CASE("pca_normalize rejects collinear points") {
    TriMesh m;
    for (int i = 0; i < 5; ++i) m.positions.push_back({double(i), 2.0 * i, 0.0});
    CHECK_THROWS_AS(pca_normalize(m), GeometryError);
}

TEST_CASE("adjacency") {
    const TriMesh two = load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3\nf 2 4 3\n");
    const FaceAdjacency a2 = adjacency(two);
    REQUIRE(a2.pairs.size() == 1);
    CHECK(a2.pairs[0].face_a == 0);
    CHECK(a2.pairs[0].face_b == 1);
    CHECK(std::min(a2.pairs[0].edge_v0, a2.pairs[0].edge_v1) == 1);
    CHECK(std::max(a2.pairs[0].edge_v0, a2.pairs[0].edge_v1) == 2);

    CHECK(adjacency(load_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")).pairs.empty());

    Rng rng(8);
    const TriMesh patch = sample_patch(gen_patch(rng, {}), 51);
    std::map<std::pair<int, int>, int> hist;
    for (const auto& t : patch.triangles)
        for (int i = 0; i < 3; ++i) ++hist[{std::min(t[i], t[(i + 1) % 3]), std::max(t[i], t[(i + 1) % 3])}];
    int interior = 0;
    for (const auto& [e, c] : hist) interior += c == 2;
    CHECK(adjacency(patch).pairs.size() == static_cast<std::size_t>(interior));
}
