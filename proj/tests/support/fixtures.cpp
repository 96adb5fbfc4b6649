#include "fixtures.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include <unistd.h>

namespace fixtures {

namespace {

// res x res samples of `point(s, t)` on [0, 1]^2; cells split along
// alternating diagonals so flat grids stay symmetric.
TriMesh grid_mesh(int nx, int ny, const std::function<Vec3(double, double)>& point) {
    TriMesh mesh;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            mesh.positions.push_back(point(static_cast<double>(i) / (nx - 1), static_cast<double>(j) / (ny - 1)));
    auto id = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            if ((i + j) % 2 == 0) {
                mesh.triangles.push_back({a, b, c});
                mesh.triangles.push_back({a, c, d});
            } else {
                mesh.triangles.push_back({a, b, d});
                mesh.triangles.push_back({b, c, d});
            }
        }
    return mesh;
}

// Elliptical square-to-disk map of [-1, 1]^2.
std::pair<double, double> square_to_disk(double x, double y) {
    return {x * std::sqrt(1.0 - 0.5 * y * y), y * std::sqrt(1.0 - 0.5 * x * x)};
}

}  // namespace

TriMesh icosphere(int subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh mesh;
    mesh.positions = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : mesh.positions) p.normalize();
    mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            mesh.positions.push_back((mesh.positions[a] + mesh.positions[b]).normalized());
            const int id = mesh.vertex_count() - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<cdf::Triangle> next;
        for (const auto& tri : mesh.triangles) {
            const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        mesh.triangles = std::move(next);
    }
    for (auto& p : mesh.positions) p *= radius;
    return mesh;
}

TriMesh cylinder(double radius, double height, int segments, int rings) {
    TriMesh mesh;
    for (int j = 0; j <= rings; ++j)
        for (int k = 0; k < segments; ++k) {
            const double a = 2.0 * std::numbers::pi * k / segments;
            mesh.positions.push_back({radius * std::cos(a), radius * std::sin(a), height * j / rings - 0.5 * height});
        }
    auto id = [segments](int k, int j) { return j * segments + (k % segments); };
    for (int j = 0; j < rings; ++j)
        for (int k = 0; k < segments; ++k) {
            const int a = id(k, j), b = id(k + 1, j), c = id(k + 1, j + 1), d = id(k, j + 1);
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }
    return mesh;
}

TriMesh flat_grid(int nx, int ny, double width, double height, double x0, double y0) {
    return grid_mesh(nx, ny, [&](double s, double t) { return Vec3(x0 + width * s, y0 + height * t, 0.0); });
}

TriMesh flat_disk(int resolution, double radius) {
    return grid_mesh(resolution, resolution, [&](double s, double t) {
        const auto [x, y] = square_to_disk(2.0 * s - 1.0, 2.0 * t - 1.0);
        return Vec3(radius * x, radius * y, 0.0);
    });
}

TriMesh polar_disk(int rings, int segments, double radius) {
    TriMesh mesh;
    mesh.positions.push_back(Vec3::Zero());
    for (int j = 1; j <= rings; ++j)
        for (int k = 0; k < segments; ++k) {
            const double a = 2.0 * std::numbers::pi * (k + 0.5 * (j % 2)) / segments;
            const double r = radius * j / rings;
            mesh.positions.push_back({r * std::cos(a), r * std::sin(a), 0.0});
        }
    auto id = [segments](int j, int k) { return 1 + (j - 1) * segments + ((k % segments) + segments) % segments; };
    for (int k = 0; k < segments; ++k) mesh.triangles.push_back({0, id(1, k), id(1, k + 1)});
    for (int j = 1; j < rings; ++j)
        for (int k = 0; k < segments; ++k) {
            // Odd rings are rotated half a step, so ring j+1 vertex k sits
            // between ring j vertices k and k+1 (j odd) or k-1 and k (j even).
            const int shift = j % 2;
            const int a = id(j, k), b = id(j, k + 1);
            const int c = id(j + 1, k + shift), d = id(j + 1, k + shift - 1);
            mesh.triangles.push_back({a, c, b});
            mesh.triangles.push_back({a, d, c});
        }
    return mesh;
}

TriMesh saddle(int resolution, double a) {
    return grid_mesh(resolution, resolution, [&](double s, double t) {
        const double x = 2.0 * s - 1.0, y = 2.0 * t - 1.0;
        return Vec3(x, y, a * (x * x - y * y));
    });
}

TriMesh sphere_cap(int resolution, double radius, double half_angle) {
    return grid_mesh(resolution, resolution, [&](double s, double t) {
        const auto [x, y] = square_to_disk(2.0 * s - 1.0, 2.0 * t - 1.0);
        const double r = std::hypot(x, y);
        const double phi = half_angle * r;
        const double alpha = std::atan2(y, x);
        return Vec3(radius * std::sin(phi) * std::cos(alpha), radius * std::sin(phi) * std::sin(alpha),
                    radius * std::cos(phi));
    });
}

TriMesh annulus(double r0, double r1, int segments, int rings) {
    TriMesh mesh;
    for (int j = 0; j <= rings; ++j)
        for (int k = 0; k < segments; ++k) {
            const double a = 2.0 * std::numbers::pi * k / segments;
            const double r = r0 + (r1 - r0) * j / rings;
            mesh.positions.push_back({r * std::cos(a), r * std::sin(a), 0.0});
        }
    auto id = [segments](int k, int j) { return j * segments + (k % segments); };
    for (int j = 0; j < rings; ++j)
        for (int k = 0; k < segments; ++k) {
            const int a = id(k, j), b = id(k + 1, j), c = id(k + 1, j + 1), d = id(k, j + 1);
            mesh.triangles.push_back({a, c, b});
            mesh.triangles.push_back({a, d, c});
        }
    return mesh;
}

TriMesh cylinder_patch(int resolution, double radius, double half_angle, double half_length) {
    return grid_mesh(resolution, resolution, [&](double s, double t) {
        const double a = (2.0 * s - 1.0) * half_angle;
        return Vec3(radius * std::sin(a), (2.0 * t - 1.0) * half_length, radius * std::cos(a));
    });
}

DirectionField constant_field(int faces, const Vec3& u, const Vec3& v) {
    DirectionField f(faces);
    for (int j = 0; j < faces; ++j) {
        f.u[j] = u;
        f.v[j] = v;
    }
    return f;
}

DirectionField random_conjugate_field(const SurfaceGeometry& geom, const cdf::CurvatureFrame& frame, cdf::Rng& rng) {
    const int m = geom.face_count();
    DirectionField f(m);
    for (int j = 0; j < m; ++j) {
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const Vec3 u = std::cos(a) * frame[j].d1 + std::sin(a) * frame[j].d2;
        f.u[j] = u;
        f.v[j] = cdf::conjugate_direction(u, frame[j]).v;
    }
    return f;
}

DirectionField random_field(int faces, cdf::Rng& rng) {
    DirectionField f(faces);
    for (int j = 0; j < faces; ++j) {
        f.u[j] = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        f.v[j] = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    return f;
}

Mat3 random_rotation(cdf::Rng& rng) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    return q.toRotationMatrix();
}

TriMesh transformed(const TriMesh& mesh, const Mat3& R, const Vec3& t, double scale) {
    TriMesh out = mesh;
    for (auto& p : out.positions) p = scale * (R * p) + t;
    return out;
}

DirectionField rotated(const DirectionField& field, const Mat3& R) {
    DirectionField out = field;
    for (int j = 0; j < field.size(); ++j) {
        out.u[j] = R * field.u[j];
        out.v[j] = R * field.v[j];
    }
    return out;
}

TempDir::TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cdf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace fixtures
