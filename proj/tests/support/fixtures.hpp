#pragma once

#include "cdf/field.hpp"
#include "cdf/rng.hpp"
#include "cdf/stroke_types.hpp"

#include <filesystem>
#include <string>

namespace fixtures {

using cdf::DirectionField;
using cdf::Mat3;
using cdf::SurfaceGeometry;
using cdf::TriMesh;
using cdf::Vec3;

/// Unit-radius icosphere; 4 subdivisions give 2562 vertices.
TriMesh icosphere(int subdivisions = 4, double radius = 1.0);

/// Open cylinder around the z axis.
TriMesh cylinder(double radius = 2.0, double height = 4.0, int segments = 64, int rings = 16);

/// Flat grid on [x0, x0 + width] x [y0, y0 + height] at z = 0, alternating diagonals.
TriMesh flat_grid(int nx, int ny, double width = 1.0, double height = 1.0, double x0 = 0.0, double y0 = 0.0);

/// Flat disk of the given radius at z = 0, built from a square grid.
TriMesh flat_disk(int resolution = 21, double radius = 1.0);

/// Flat disk of rings around a center vertex (vertex 0) with `segments`
/// triangles in the center fan.
TriMesh polar_disk(int rings = 8, int segments = 24, double radius = 1.0);

/// z = a (x^2 - y^2) over [-1, 1]^2.
TriMesh saddle(int resolution = 21, double a = 0.5);

/// Disk-topology spherical cap of `radius` subtending `half_angle` radians.
TriMesh sphere_cap(int resolution = 21, double radius = 1.0, double half_angle = 0.6);

/// Flat annulus with inner radius r0 and outer radius r1.
TriMesh annulus(double r0 = 0.6, double r1 = 1.0, int segments = 96, int rings = 4);

/// Cylinder patch (disk topology) with axis along y: x = r sin(a), z = r cos(a).
TriMesh cylinder_patch(int resolution = 21, double radius = 2.0, double half_angle = 0.4, double half_length = 0.8);

/// u = x, v = y on every face.
DirectionField constant_field(int faces, const Vec3& u = Vec3::UnitX(), const Vec3& v = Vec3::UnitY());

/// Random unit tangent u per face with v = conjugate_direction(u).
DirectionField random_conjugate_field(const SurfaceGeometry& geom, const cdf::CurvatureFrame& frame, cdf::Rng& rng);

/// Arbitrary (non-tangent, non-unit) vectors with entries in [-1, 1].
DirectionField random_field(int faces, cdf::Rng& rng);

/// Uniformly random rotation.
Mat3 random_rotation(cdf::Rng& rng);

TriMesh transformed(const TriMesh& mesh, const Mat3& R, const Vec3& t = Vec3::Zero(), double scale = 1.0);
DirectionField rotated(const DirectionField& field, const Mat3& R);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures
