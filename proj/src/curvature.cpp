#include "cdf/curvature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace cdf {

bool is_umbilic(const FrameEntry& entry, double tol, double abs_floor) {
    const double scale = std::max({std::abs(entry.k1), std::abs(entry.k2), abs_floor});
    return std::abs(entry.k1 - entry.k2) <= tol * scale;
}

ShapeOperatorFit fit_shape_operator(const TriMesh& mesh, std::span<const Vec3> vnormals, int face) {
    const auto& t = mesh.triangles[face];
    const Vec3 p[3] = {mesh.positions[t[0]], mesh.positions[t[1]], mesh.positions[t[2]]};
    const Vec3 n[3] = {vnormals[t[0]], vnormals[t[1]], vnormals[t[2]]};

    ShapeOperatorFit fit;
    fit.normal = (p[1] - p[0]).cross(p[2] - p[0]).normalized();
    fit.e_u = (p[1] - p[0]).normalized();
    fit.e_v = fit.normal.cross(fit.e_u);

    // Unknowns (a, b, c) of S = [a b; b c]; each edge gives S e = dn in the
    // tangent basis, two equations per edge.
    Eigen::Matrix<double, 6, 3> A = Eigen::Matrix<double, 6, 3>::Zero();
    Eigen::Matrix<double, 6, 1> rhs;
    for (int i = 0; i < 3; ++i) {
        const Vec3 e = p[(i + 1) % 3] - p[i];
        const Vec3 dn = n[(i + 1) % 3] - n[i];
        const double eu = e.dot(fit.e_u), ev = e.dot(fit.e_v);
        A(2 * i, 0) = eu;
        A(2 * i, 1) = ev;
        A(2 * i + 1, 1) = eu;
        A(2 * i + 1, 2) = ev;
        rhs(2 * i) = dn.dot(fit.e_u);
        rhs(2 * i + 1) = dn.dot(fit.e_v);
    }
    const Eigen::Vector3d abc = A.colPivHouseholderQr().solve(rhs);
    fit.S << abc(0), abc(1), abc(1), abc(2);
    return fit;
}

FrameEntry decompose(const ShapeOperatorFit& fit, double umbilic_tol) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(fit.S);
    const Vec2 evals = eig.eigenvalues();
    const int major = std::abs(evals(1)) >= std::abs(evals(0)) ? 1 : 0;

    FrameEntry out;
    out.k1 = evals(major);
    out.k2 = evals(1 - major);
    const Vec2 dir = eig.eigenvectors().col(major);
    out.d1 = (dir(0) * fit.e_u + dir(1) * fit.e_v).normalized();

    if (is_umbilic(out, umbilic_tol)) {
        const double k = 0.5 * (out.k1 + out.k2);
        out.k1 = out.k2 = k;
        Vec3 axis = Vec3::UnitX() - fit.normal.x() * fit.normal;
        if (axis.norm() < 1e-6) axis = Vec3::UnitY() - fit.normal.y() * fit.normal;
        out.d1 = axis.normalized();
    }
    out.d2 = fit.normal.cross(out.d1);
    return out;
}

CurvatureFrame estimate_curvature(const TriMesh& mesh, std::span<const Vec3> vnormals, double umbilic_tol) {
    CurvatureFrame frame;
    frame.faces.resize(static_cast<std::size_t>(mesh.face_count()));
#pragma omp parallel for schedule(static)
    for (int f = 0; f < mesh.face_count(); ++f)
        frame.faces[f] = decompose(fit_shape_operator(mesh, vnormals, f), umbilic_tol);
    return frame;
}

CurvatureFrame estimate_curvature(const TriMesh& mesh, double umbilic_tol) {
    return estimate_curvature(mesh, curvature_normals(mesh), umbilic_tol);
}

}  // namespace cdf
