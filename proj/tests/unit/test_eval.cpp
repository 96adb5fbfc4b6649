#include "doctest.h"
#include "fixtures.hpp"

#include "cdf/dataset.hpp"
#include "cdf/eval.hpp"
#include "cdf/solver.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace cdf;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

Vec3 rotate_about(const Vec3& x, const Vec3& n, double angle) { return Eigen::AngleAxisd(angle, n) * x; }

StrokeAssignment one_stroke(std::vector<StrokeSegment> segs) {
    AssignedStroke s;
    for (const auto& seg : segs) {
        s.segments.push_back(seg);
        if (std::find(s.faces.begin(), s.faces.end(), seg.face) == s.faces.end()) s.faces.push_back(seg.face);
    }
    return {{s}};
}

}  // namespace

TEST_CASE("line angle") {
    CHECK(line_angle(Vec3(1, 2, 3), Vec3(1, 2, 3)) == 0.0);
    CHECK(line_angle(Vec3(1, 2, 3), Vec3(-2, -4, -6)) == 0.0);
    CHECK(line_angle(Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(std::numbers::pi / 2));
    CHECK(line_angle(Vec3::UnitX(), Vec3(1, 1, 0)) == doctest::Approx(std::numbers::pi / 4));
    CHECK(line_angle(Vec3::UnitX(), Vec3(-1, 1, 0)) == doctest::Approx(std::numbers::pi / 4));
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const Vec3 a = rng.unit_vector(), b = rng.unit_vector();
        CHECK(std::abs(line_angle(a, b) - std::acos(std::min(1.0, std::abs(a.dot(b))))) <= 1e-7);
    }
}

TEST_CASE("stroke deviation examples") {
    const DirectionField f = fixtures::constant_field(4);
    const auto aligned = one_stroke({{0, Vec3(0, 0, 0), Vec3(1, 0, 0)}, {1, Vec3(0, 0, 0), Vec3(0, -2, 0)}});
    CHECK(stroke_deviation(f, aligned) == 0.0);

    const DirectionField off = fixtures::constant_field(4, Vec3(0, 0, 1), Vec3(0, 0, -1));
    CHECK(stroke_deviation(off, aligned) == doctest::Approx(90.0));

    const Vec3 d30(std::cos(std::numbers::pi / 6), std::sin(std::numbers::pi / 6), 0);
    const auto mixed = one_stroke({{0, Vec3::Zero(), Vec3(1, 0, 0)}, {1, Vec3::Zero(), d30}});
    CHECK(std::abs(stroke_deviation(f, mixed) - 15.0) <= 1e-9);

    // Length weighting: the 30 degree segment twice as long.
    const auto weighted = one_stroke({{0, Vec3::Zero(), Vec3(1, 0, 0)}, {1, Vec3::Zero(), 2.0 * d30}});
    CHECK(std::abs(stroke_deviation(f, weighted) - 20.0) <= 1e-9);

    CHECK_THROWS(stroke_deviation(f, StrokeAssignment{}));
}

TEST_CASE("gt closeness") {
    const auto g = SurfaceGeometry::build(fixtures::saddle(11));
    const auto frame = estimate_curvature(g.mesh);
    Rng rng(2);
    const DirectionField gt = fixtures::random_conjugate_field(g, frame, rng);
    CHECK(gt_closeness(gt, gt) == 0.0);

    DirectionField swapped = gt;
    for (int j = 0; j < gt.size(); ++j) {
        swapped.u[j] = -gt.v[j];
        swapped.v[j] = (j % 2 ? -1.0 : 1.0) * gt.u[j];
    }
    CHECK(gt_closeness(swapped, gt) == 0.0);
    CHECK(gt_closeness(gt, swapped) == 0.0);

    DirectionField turned = gt;
    for (int j = 0; j < gt.size(); ++j) {
        const Vec3& n = g.face_normals[j];
        turned.u[j] = rotate_about(gt.u[j], n, 10.0 / kDeg);
        turned.v[j] = rotate_about(gt.v[j], n, 10.0 / kDeg);
    }
    CHECK(std::abs(gt_closeness(turned, gt) - 10.0) <= 0.01);

    // Rotating u by 20 and v by 0 averages to 10 in the direct pairing.
    DirectionField half = gt;
    for (int j = 0; j < gt.size(); ++j) half.u[j] = rotate_about(gt.u[j], g.face_normals[j], 20.0 / kDeg);
    const double theta = gt_closeness(half, gt);
    CHECK(theta <= 10.0 + 1e-9);
    CHECK(theta >= 0.0);

    DirectionField shorter = gt;
    shorter.u.pop_back();
    shorter.v.pop_back();
    CHECK_THROWS(gt_closeness(shorter, gt));
}

TEST_CASE("delta and theta are invariant") {
    const auto g = SurfaceGeometry::build(fixtures::saddle(15));
    const auto frame = estimate_curvature(g.mesh);
    Rng rng(3);
    const DirectionField gt = fixtures::random_conjugate_field(g, frame, rng);
    const DirectionField field = fixtures::random_conjugate_field(g, frame, rng);
    std::vector<Polyline> lines{{Vec3(-0.7, -0.5, 0.5 * (0.49 - 0.25)), Vec3(0.6, 0.3, 0.5 * (0.36 - 0.09))}};
    for (auto& p : lines[0]) p = closest_surface_point(g.mesh, p).point;
    const auto st = assign_segments(g, lines);
    const double delta = stroke_deviation(field, st), theta = gt_closeness(field, gt);
    CHECK(delta > 0.0);
    CHECK(theta > 0.0);
    CHECK(delta <= 90.0);
    CHECK(theta <= 90.0);

    DirectionField flipped = field;
    for (int j = 0; j < field.size(); ++j) {
        flipped.u[j] = -field.v[j];
        flipped.v[j] = field.u[j];
    }
    CHECK(stroke_deviation(flipped, st) == delta);
    CHECK(gt_closeness(flipped, gt) == theta);

    const Mat3 R = fixtures::random_rotation(rng);
    const Vec3 t(0.3, -2, 1);
    const auto moved = SurfaceGeometry::build(fixtures::transformed(g.mesh, R, t));
    std::vector<Polyline> moved_lines{{R * lines[0][0] + t, R * lines[0][1] + t}};
    const auto moved_st = assign_segments(moved, moved_lines);
    CHECK(std::abs(stroke_deviation(fixtures::rotated(field, R), moved_st) - delta) <= 1e-6);
    CHECK(std::abs(gt_closeness(fixtures::rotated(field, R), fixtures::rotated(gt, R)) - theta) <= 1e-6);
}

TEST_CASE("evaluate and csv") {
    SampleConfig cfg;
    cfg.patch.resolution = 21;
    const DatasetSample s = make_sample(7, cfg);
    const auto g = SurfaceGeometry::build(s.mesh);
    const auto st = assign_segments(g, polylines(s.strokes));
    const EvalReport self = evaluate(g, s.gt_field, st, s.gt_field);
    CHECK(self.theta == 0.0);
    CHECK(self.delta < 2.0);
    CHECK(self.singularities == singularity_indices(s.gt_field, g).count());

    SolverConfig sc;
    sc.max_iters = 300;
    const auto solved = solve_cdf(g, s.frame, {}, &st, sc);
    EvalReport r = evaluate(g, s.gt_field, st, solved.field);
    CHECK(std::isfinite(r.delta));
    CHECK(std::isfinite(r.theta));
    CHECK(r.delta >= 0.0);
    CHECK(r.theta <= 90.0);
    r.name = "solver";
    r.planarity_before = PlanarityReport{{0.01, 0.03}, 0.02, 0.03};
    r.planarity_after = PlanarityReport{{0.001, 0.002}, 0.0015, 0.002};

    EvalReport other = self;
    other.name = "gt";
    const std::string csv = eval_csv({r, other});
    std::istringstream in(csv);
    std::string header, row1, row2, extra;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(!std::getline(in, extra));
    CHECK(header.find("delta") != std::string::npos);
    CHECK(header.find("theta") != std::string::npos);
    CHECK(row1.rfind("solver,", 0) == 0);
    CHECK(row1.find("0.02") != std::string::npos);
    CHECK(row2.find(",,") != std::string::npos);

    // Re-summation of the per-row values gives the reported means.
    const double mean_delta = 0.5 * (r.delta + other.delta);
    std::vector<double> parsed;
    for (const std::string& row : {row1, row2}) {
        std::vector<std::string> cells;
        std::stringstream ss(row);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() >= 8);
        parsed.push_back(std::stod(cells[5]));
    }
    CHECK(std::abs(0.5 * (parsed[0] + parsed[1]) - mean_delta) <= 1e-9 * std::max(1.0, mean_delta));
}
