#include "doctest.h"
#include "fixtures.hpp"

#include "cdf/dataset.hpp"
#include "cdf/eval.hpp"

#include <cmath>
#include <fstream>
#include <set>

using namespace cdf;
namespace fs = std::filesystem;

namespace {

// Cox-de Boor recursion, written out directly for comparison.
double cox_de_boor(int i, int p, double u, const std::vector<double>& k) {
    if (p == 0) {
        const bool last = u == k.back() && k[i] < k[i + 1] && k[i + 1] == k.back();
        return (k[i] <= u && u < k[i + 1]) || last ? 1.0 : 0.0;
    }
    double left = 0.0, right = 0.0;
    if (k[i + p] > k[i]) left = (u - k[i]) / (k[i + p] - k[i]) * cox_de_boor(i, p - 1, u, k);
    if (k[i + p + 1] > k[i + 1]) right = (k[i + p + 1] - u) / (k[i + p + 1] - k[i + 1]) * cox_de_boor(i + 1, p - 1, u, k);
    return left + right;
}

Vec3 oracle_point(const BSplinePatch& patch, double s, double t) {
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < patch.grid; ++i)
        for (int j = 0; j < patch.grid; ++j)
            p += cox_de_boor(i, 3, s, patch.knots) * cox_de_boor(j, 3, t, patch.knots) * patch.at(i, j);
    return p;
}

SampleConfig small_config(int resolution = 21) {
    SampleConfig c;
    c.patch.resolution = resolution;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("clamped uniform knots") {
    const auto k = clamped_uniform_knots(7);
    const std::vector<double> expected{0, 0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1, 1};
    CHECK(k == expected);
    CHECK(clamped_uniform_knots(4) == std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1});
    CHECK_THROWS(clamped_uniform_knots(3));
}

TEST_CASE("gen_patch") {
    Rng a(5), b(5);
    const PatchConfig cfg;
    const BSplinePatch p = gen_patch(a, cfg), q = gen_patch(b, cfg);
    CHECK(p.control == q.control);
    CHECK(p.grid == 7);
    CHECK(p.control.size() == 49);
    CHECK(p.height >= 0.1);
    CHECK(p.height <= 0.5);

    Rng rng(6);
    for (int k = 0; k < 10; ++k) {
        const double s = rng.uniform(), t = rng.uniform();
        CHECK((p.evaluate(s, t) - oracle_point(p, s, t)).norm() <= 1e-10);
    }
    for (double s : {0.0, 0.25, 1.0})
        for (double t : {0.0, 0.5, 1.0}) CHECK((p.evaluate(s, t) - oracle_point(p, s, t)).norm() <= 1e-10);
    CHECK((p.evaluate(0, 0) - p.at(0, 0)).norm() <= 1e-14);
    CHECK((p.evaluate(1, 1) - p.at(6, 6)).norm() <= 1e-14);
    CHECK_THROWS(p.evaluate(1.5, 0.0));

    PatchConfig bad;
    bad.warp = -1;
    CHECK_THROWS(gen_patch(rng, bad));
    bad = {};
    bad.height_max = 0.05;
    CHECK_THROWS(gen_patch(rng, bad));
}

TEST_CASE("patch heights span the configured interval") {
    Rng rng(7);
    double lo = 1e9, hi = -1e9;
    std::vector<int> bins(4, 0);
    for (int k = 0; k < 100; ++k) {
        const BSplinePatch p = gen_patch(rng, {});
        lo = std::min(lo, p.height);
        hi = std::max(hi, p.height);
        ++bins[std::min(3, static_cast<int>((p.height - 0.1) / 0.1))];
        // Before rotation and warp, control z lies in [-h, h]; after them the
        // net still spans a z-range of the same order.
        double zmin = 1e9, zmax = -1e9;
        for (const Vec3& c : p.control) {
            zmin = std::min(zmin, c.z());
            zmax = std::max(zmax, c.z());
        }
        CHECK(zmax > zmin);
    }
    CHECK(lo >= 0.1);
    CHECK(hi <= 0.5);
    CHECK(lo < 0.15);
    CHECK(hi > 0.45);
    for (int c : bins) CHECK(c > 10);
}

TEST_CASE("sample_patch") {
    Rng rng(8);
    const BSplinePatch p = gen_patch(rng, {});
    const TriMesh mesh = sample_patch(p);
    CHECK(mesh.vertex_count() == 2601);
    CHECK(mesh.face_count() == 5000);
    CHECK((mesh.positions[51 * 10 + 20] - p.evaluate(0.2, 0.4)).norm() <= 1e-15);
    // Each cell uses its shorter diagonal.
    for (int f = 0; f < mesh.face_count(); f += 2) {
        const auto& t0 = mesh.triangles[f];
        const auto& t1 = mesh.triangles[f + 1];
        std::set<int> shared;
        for (int a : t0)
            for (int b : t1)
                if (a == b) shared.insert(a);
        REQUIRE(shared.size() == 2);
        std::set<int> all(t0.begin(), t0.end());
        all.insert(t1.begin(), t1.end());
        std::vector<int> other;
        for (int v : all)
            if (!shared.count(v)) other.push_back(v);
        const double used = (mesh.positions[*shared.begin()] - mesh.positions[*shared.rbegin()]).norm();
        const double alt = (mesh.positions[other[0]] - mesh.positions[other[1]]).norm();
        CHECK(used <= alt);
    }

    PatchConfig flat;
    flat.height_min = flat.height_max = 0.0;
    flat.warp = 0.0;
    const BSplinePatch fp = gen_patch(rng, flat);
    const auto g = SurfaceGeometry::build(sample_patch(fp, 21));
    const auto frame = estimate_curvature(g.mesh);
    for (int j = 0; j < g.face_count(); ++j) {
        CHECK(std::abs(std::abs(g.face_normals[j].dot(g.face_normals[0])) - 1.0) <= 1e-12);
        CHECK(std::abs(frame[j].k1) <= 1e-8);
        CHECK(std::abs(frame[j].k2) <= 1e-8);
    }
    CHECK_THROWS(sample_patch(fp, 1));
}

TEST_CASE("make_sample gates and determinism") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const DatasetSample s = make_sample(seed, {});
        CHECK(s.mesh.vertex_count() == 2601);
        CHECK(s.mesh.face_count() == 5000);
        double radius = 0.0;
        for (const Vec3& p : s.mesh.positions) radius = std::max(radius, p.norm());
        CHECK(std::abs(radius - 1.0) <= 1e-9);
        CHECK(s.meta.anchor_count >= 1);
        CHECK(s.meta.anchor_count <= 5);
        CHECK(static_cast<int>(s.anchors.size()) == s.meta.anchor_count);
        CHECK(s.strokes.size() == 2 * s.anchors.size());
        CHECK(mean_conjugacy(s.gt_field, s.frame) <= 1e-3);
        const auto g = SurfaceGeometry::build(s.mesh);
        const double delta = stroke_deviation(s.gt_field, assign_segments(g, polylines(s.strokes)));
        CHECK(delta < 2.0);
        const double cap = 0.8 * bounding_box_diagonal(s.mesh);
        for (const Stroke& st : s.strokes) CHECK(st.length() <= cap + 1e-9);
        for (const Anchor& a : s.anchors) {
            CHECK(s.gt_field.u[a.face] == a.u);
            CHECK(s.gt_field.v[a.face] == a.v);
        }
    }

    fixtures::TempDir dir("cdf-sample");
    write_sample(make_sample(4, small_config()), dir.path() / "a");
    write_sample(make_sample(4, small_config()), dir.path() / "b");
    for (const char* name : kSampleFiles) CHECK(slurp(dir.path() / "a" / name) == slurp(dir.path() / "b" / name));
    CHECK(sample_checksum(dir.path() / "a") == sample_checksum(dir.path() / "b"));
    write_sample(make_sample(5, small_config()), dir.path() / "c");
    CHECK(sample_checksum(dir.path() / "a") != sample_checksum(dir.path() / "c"));

    SampleConfig bad;
    bad.max_anchors = 6;
    CHECK_THROWS(make_sample(1, bad));
    SampleConfig strict = small_config();
    strict.max_conjugacy = -1.0;
    strict.max_attempts = 2;
    CHECK_THROWS_WITH_AS(make_sample(1, strict), doctest::Contains("after 2 attempts"), Error);
}

TEST_CASE("anchor counts are uniform on 1..5") {
    // Cheap samples: the count is drawn before the solve, so the solver
    // budget does not affect it as long as no attempt is rejected.
    SampleConfig c = small_config(9);
    c.solver.max_iters = 20;
    c.max_conjugacy = 1e9;
    c.max_stroke_delta = 1e9;
    std::vector<int> counts(6, 0);
    const int n = 250;
    for (int i = 0; i < n; ++i) ++counts[make_sample(Rng::derive(99, i), c).meta.anchor_count];
    double chi2 = 0.0;
    for (int k = 1; k <= 5; ++k) chi2 += (counts[k] - n / 5.0) * (counts[k] - n / 5.0) / (n / 5.0);
    MESSAGE("anchor count chi2 ", chi2);
    CHECK(chi2 < 13.277);  // 4 degrees of freedom, p = 0.01
}

TEST_CASE("sample round trip and corruption") {
    fixtures::TempDir dir("cdf-roundtrip");
    const DatasetSample s = make_sample(11, small_config());
    write_sample(s, dir.path());
    const DatasetSample r = read_sample(dir.path());
    REQUIRE(r.gt_field.size() == s.gt_field.size());
    for (int j = 0; j < s.gt_field.size(); ++j) {
        CHECK((r.gt_field.u[j] - s.gt_field.u[j]).norm() <= 1e-12);
        CHECK((r.gt_field.v[j] - s.gt_field.v[j]).norm() <= 1e-12);
        CHECK(std::abs(r.frame[j].k1 - s.frame[j].k1) <= 1e-12);
    }
    for (int i = 0; i < s.mesh.vertex_count(); ++i) CHECK((r.mesh.positions[i] - s.mesh.positions[i]).norm() <= 1e-12);
    CHECK(r.mesh.triangles == s.mesh.triangles);
    REQUIRE(r.anchors.size() == s.anchors.size());
    CHECK(r.anchors[0].face == s.anchors[0].face);
    REQUIRE(r.strokes.size() == s.strokes.size());
    CHECK(r.strokes[0].faces == s.strokes[0].faces);
    CHECK(r.meta.anchor_count == s.meta.anchor_count);
    CHECK(r.meta.seed == 11);

    Json field = read_json_file(dir.path() / "field.json");
    field["u"].erase(field["u"].size() - 1);
    write_text_file(dir.path() / "field.json", dump(field));
    CHECK_THROWS_WITH(read_sample(dir.path()), doctest::Contains("field.json"));

    write_text_file(dir.path() / "field.json", "{not json");
    CHECK_THROWS_WITH(read_sample(dir.path()), doctest::Contains("field.json"));

    fs::remove(dir.path() / "anchors.json");
    CHECK_THROWS_WITH(read_sample(dir.path()), doctest::Contains("anchors.json"));
}

TEST_CASE("gen_dataset manifest") {
    fixtures::TempDir dir("cdf-dataset");
    DatasetConfig cfg;
    cfg.train = 6;
    cfg.val = 2;
    cfg.test = 2;
    cfg.sample = small_config(15);
    const auto entries = gen_dataset(dir.path(), 21, cfg);
    REQUIRE(entries.size() == 10);
    const Json manifest = read_json_file(dir.path() / "manifest.json");
    REQUIRE(manifest.at("samples").size() == 10);
    CHECK(manifest.at("seed").get<std::uint64_t>() == 21);
    std::set<std::string> dirs;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        CHECK(manifest["samples"][i].at("checksum").get<std::string>() == e.checksum);
        CHECK(sample_checksum(dir.path() / e.dir) == e.checksum);
        CHECK(e.checksum.size() == 64);
        dirs.insert(e.dir);
    }
    CHECK(dirs.size() == 10);
    CHECK(manifest_samples(dir.path(), "train").size() == 6);
    CHECK(manifest_samples(dir.path(), "val").size() == 2);
    CHECK(manifest_samples(dir.path(), "test").size() == 2);
    CHECK(manifest_samples(dir.path()).size() == 10);

    const DatasetConfig back = dataset_config_from_json(dataset_config_to_json(cfg));
    CHECK(back.train == 6);
    CHECK(back.sample.patch.resolution == 15);
    CHECK(dataset_config_to_json(back) == dataset_config_to_json(cfg));
    CHECK_THROWS(dataset_config_from_json(Json::array()));

    fixtures::TempDir again("cdf-dataset");
    const auto entries2 = gen_dataset(again.path(), 21, cfg);
    CHECK(slurp(dir.path() / "manifest.json") == slurp(again.path() / "manifest.json"));
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
