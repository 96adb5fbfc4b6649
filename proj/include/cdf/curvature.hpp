#pragma once

#include "cdf/mesh.hpp"

#include <span>
#include <vector>

namespace cdf {

/// Principal frame of one face: d1, d2 unit and orthogonal in the face
/// plane, |k1| >= |k2|.
struct FrameEntry {
    Vec3 d1 = Vec3::UnitX();
    Vec3 d2 = Vec3::UnitY();
    double k1 = 0.0;
    double k2 = 0.0;
};

struct CurvatureFrame {
    std::vector<FrameEntry> faces;

    int size() const { return static_cast<int>(faces.size()); }
    const FrameEntry& operator[](int f) const { return faces[static_cast<std::size_t>(f)]; }
};

inline constexpr double kUmbilicTolerance = 1e-3;
inline constexpr double kUmbilicAbsFloor = 1e-6;

/// |k1 - k2| <= tol * max(|k1|, |k2|, abs_floor)
bool is_umbilic(const FrameEntry& entry, double tol = kUmbilicTolerance,
                double abs_floor = kUmbilicAbsFloor);

/// Least-squares shape operator of a face in the tangent basis (e_u, e_v),
/// fitted from vertex-normal differences along the three edges.
struct ShapeOperatorFit {
    Vec3 e_u;
    Vec3 e_v;
    Vec3 normal;
    Mat2 S;
};

ShapeOperatorFit fit_shape_operator(const TriMesh& mesh, std::span<const Vec3> vnormals, int face);

/// Eigen-decomposition of a fit. Umbilic fits get k1 = k2 = mean and a
/// deterministic d1 (global x projected into the plane, else y).
FrameEntry decompose(const ShapeOperatorFit& fit, double umbilic_tol = kUmbilicTolerance);

CurvatureFrame estimate_curvature(const TriMesh& mesh, std::span<const Vec3> vnormals,
                                  double umbilic_tol = kUmbilicTolerance);

/// Same, with curvature_normals(mesh).
CurvatureFrame estimate_curvature(const TriMesh& mesh, double umbilic_tol = kUmbilicTolerance);

}  // namespace cdf
