#include "cdf/dataset.hpp"
#include "cdf/eval.hpp"
#include "cdf/log.hpp"

#include <Eigen/Geometry>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <exception>
#include <numbers>

namespace cdf {

namespace fs = std::filesystem;

std::vector<double> clamped_uniform_knots(int count) {
    if (count < 4) throw Error("a bicubic B-spline needs at least 4 control points per direction");
    const int spans = count - 3;
    std::vector<double> k;
    for (int i = 0; i < 4; ++i) k.push_back(0.0);
    for (int i = 1; i < spans; ++i) k.push_back(static_cast<double>(i) / spans);
    for (int i = 0; i < 4; ++i) k.push_back(1.0);
    return k;
}

namespace {

int find_span(int count, const std::vector<double>& knots, double u) {
    if (u >= knots[count]) return count - 1;
    int lo = 3, hi = count;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (u < knots[mid]) hi = mid; else lo = mid;
    }
    return lo;
}

// Nonzero cubic basis functions N[span-3 .. span] at u.
std::array<double, 4> basis(int span, double u, const std::vector<double>& knots) {
    std::array<double, 4> N{1.0, 0.0, 0.0, 0.0};
    std::array<double, 4> left{}, right{};
    for (int j = 1; j <= 3; ++j) {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = N[r] / (right[r + 1] + left[j - r]);
            N[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        N[j] = saved;
    }
    return N;
}

}  // namespace

Vec3 BSplinePatch::evaluate(double s, double t) const {
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0) throw Error("B-spline parameter outside [0, 1]");
    const int ss = find_span(grid, knots, s), ts = find_span(grid, knots, t);
    const auto Ns = basis(ss, s, knots), Nt = basis(ts, t, knots);
    Vec3 p = Vec3::Zero();
    for (int a = 0; a < 4; ++a) {
        Vec3 row = Vec3::Zero();
        for (int b = 0; b < 4; ++b) row += Nt[b] * at(ss - 3 + a, ts - 3 + b);
        p += Ns[a] * row;
    }
    return p;
}

BSplinePatch gen_patch(Rng& rng, const PatchConfig& config) {
    if (config.grid < 4) throw Error("patch grid must be >= 4");
    if (config.height_min < 0.0 || config.height_max < config.height_min) throw Error("invalid patch height range");
    if (config.warp < 0.0) throw Error("warp amplitude must be >= 0");

    const int g = config.grid;
    BSplinePatch patch;
    patch.grid = g;
    patch.knots = clamped_uniform_knots(g);
    patch.height = rng.uniform(config.height_min, config.height_max);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            patch.control.emplace_back(-1.0 + 2.0 * i / (g - 1), -1.0 + 2.0 * j / (g - 1),
                                       rng.uniform(-patch.height, patch.height));

    const double qw = rng.normal(), qx = rng.normal(), qy = rng.normal(), qz = rng.normal();
    const Mat3 R = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    for (auto& p : patch.control) p = R * p;

    // Each axis gets one sinusoid of wavelength >= 4; |displacement| <= warp.
    std::array<Vec3, 3> freq;
    std::array<double, 3> phase{};
    for (int k = 0; k < 3; ++k) {
        for (int c = 0; c < 3; ++c) freq[k][c] = rng.uniform(-1.0, 1.0) * std::numbers::pi / 2.0;
        phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    const double amp = config.warp / std::sqrt(3.0);
    for (auto& p : patch.control) {
        const Vec3 base = p;
        for (int k = 0; k < 3; ++k) p[k] += amp * std::sin(freq[k].dot(base) + phase[k]);
    }
    return patch;
}

TriMesh sample_patch(const BSplinePatch& patch, int resolution) {
    if (resolution < 2) throw Error("patch resolution must be >= 2");
    const int r = resolution;
    TriMesh mesh;
    mesh.positions.reserve(static_cast<std::size_t>(r * r));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            mesh.positions.push_back(patch.evaluate(static_cast<double>(i) / (r - 1), static_cast<double>(j) / (r - 1)));
    auto id = [r](int i, int j) { return i * r + j; };
    for (int i = 0; i + 1 < r; ++i) {
        for (int j = 0; j + 1 < r; ++j) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            const double ac = (mesh.positions[a] - mesh.positions[c]).norm();
            const double bd = (mesh.positions[b] - mesh.positions[d]).norm();
            if (ac <= bd) {
                mesh.triangles.push_back({a, b, c});
                mesh.triangles.push_back({a, c, d});
            } else {
                mesh.triangles.push_back({a, b, d});
                mesh.triangles.push_back({b, c, d});
            }
        }
    }
    validate(mesh);
    return mesh;
}

double mean_conjugacy(const DirectionField& field, const CurvatureFrame& frame) {
    const auto r = conjugacy_residual(field, frame);
    double sum = 0.0;
    for (double x : r) sum += std::abs(x);
    return r.empty() ? 0.0 : sum / static_cast<double>(r.size());
}

std::vector<Stroke> anchor_strokes(const DirectionField& field, const SurfaceGeometry& geom,
                                   const std::vector<Anchor>& anchors, double max_length) {
    const TraceConfig cfg{0.5 * max_length, 10 * geom.face_count()};
    std::vector<Stroke> strokes;
    for (const auto& a : anchors) {
        const Vec3 start = face_centroid(geom.mesh, a.face);
        for (Family fam : {Family::U, Family::V}) strokes.push_back(trace_both_ways(field, geom, a.face, start, fam, cfg));
    }
    return strokes;
}

DatasetSample make_sample(std::uint64_t seed, const SampleConfig& config) {
    if (config.min_anchors < 1 || config.max_anchors > 5 || config.min_anchors > config.max_anchors)
        throw Error("anchor count range must lie within [1, 5]");
    const int res = config.patch.resolution;
    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        const std::uint64_t attempt_seed = Rng::derive(seed, static_cast<std::uint64_t>(attempt));
        Rng rng(attempt_seed);
        try {
            DatasetSample s;
            const BSplinePatch patch = gen_patch(rng, config.patch);
            auto [mesh, transform] = pca_normalize(sample_patch(patch, res));
            s.transform = transform;
            const SurfaceGeometry geom = SurfaceGeometry::build(std::move(mesh));
            s.frame = estimate_curvature(geom.mesh);
            const int count = rng.uniform_int(config.min_anchors, config.max_anchors);
            s.anchors = sample_anchors(geom, s.frame, count, rng);

            SolverConfig sc = config.solver;
            sc.seed = rng.next();
            SolveResult solved = solve_cdf(geom, s.frame, s.anchors, nullptr, sc);
            s.gt_field = std::move(solved.field);

            s.meta.seed = seed;
            s.meta.attempt = attempt;
            s.meta.height = patch.height;
            s.meta.anchor_count = count;
            s.meta.solver_iterations = solved.iterations;
            s.meta.converged = solved.converged;
            s.meta.mean_conjugacy = mean_conjugacy(s.gt_field, s.frame);
            if (!(s.meta.mean_conjugacy <= config.max_conjugacy))
                throw NumericalError(fmt::format("mean conjugacy residual {:.3e} above gate", s.meta.mean_conjugacy));

            s.strokes = anchor_strokes(s.gt_field, geom, s.anchors, config.stroke_length * bounding_box_diagonal(geom.mesh));
            for (std::size_t i = 0; i < s.strokes.size(); ++i)
                if (s.strokes[i].points.size() < 2) throw GeometryError(fmt::format("stroke {} is empty", i));
            const auto assignment = assign_segments(geom, polylines(s.strokes));
            s.meta.stroke_delta = stroke_deviation(s.gt_field, assignment);
            if (!(s.meta.stroke_delta < config.max_stroke_delta))
                throw GeometryError(fmt::format("stroke deviation {:.3f} deg above gate", s.meta.stroke_delta));

            double radius = 0.0;
            for (const auto& p : geom.mesh.positions) radius = std::max(radius, p.norm());
            if (std::abs(radius - 1.0) > 1e-9) throw GeometryError(fmt::format("normalized radius {:.17g}", radius));
            if (geom.vertex_count() != res * res || geom.face_count() != 2 * (res - 1) * (res - 1))
                throw GeometryError("unexpected mesh size");

            s.mesh = geom.mesh;
            return s;
        } catch (const Error& e) {
            log().info("sample seed {} attempt {} rejected: {}", seed, attempt, e.what());
        }
    }
    throw Error(fmt::format("sample seed {}: no valid sample after {} attempts", seed, config.max_attempts));
}

namespace {

Json meta_to_json(const DatasetSample& s) {
    const auto& m = s.meta;
    return {{"seed", m.seed},
            {"attempt", m.attempt},
            {"height", m.height},
            {"anchor_count", m.anchor_count},
            {"solver_iterations", m.solver_iterations},
            {"converged", m.converged},
            {"mean_conjugacy", m.mean_conjugacy},
            {"stroke_delta", m.stroke_delta},
            {"transform", transform_to_json(s.transform)}};
}

template <class F>
auto with_file(const fs::path& path, F&& f) {
    try {
        return f(read_json_file(path));
    } catch (const ParseError& e) {
        const std::string what = e.what();
        if (what.starts_with(path.string())) throw;
        throw ParseError(fmt::format("{}: {}", path.string(), what));
    } catch (const Json::exception& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace

void write_sample(const DatasetSample& s, const fs::path& dir) {
    fs::create_directories(dir);
    save_mesh_file(s.mesh, dir / "mesh.obj");
    write_text_file(dir / "frame.json", dump(frame_to_json(s.frame)));
    write_text_file(dir / "field.json", dump(field_to_json(s.gt_field)));
    write_text_file(dir / "anchors.json", dump(anchors_to_json(s.anchors)));
    write_text_file(dir / "strokes.json", dump(strokes_to_json(s.strokes)));
    write_text_file(dir / "meta.json", dump(meta_to_json(s)));
}

DatasetSample read_sample(const fs::path& dir) {
    for (const char* name : kSampleFiles)
        if (!fs::exists(dir / name)) throw Error(fmt::format("{}: missing", (dir / name).string()));
    DatasetSample s;
    s.mesh = load_mesh_file(dir / "mesh.obj");
    const int m = s.mesh.face_count();
    s.frame = with_file(dir / "frame.json", [m](const Json& j) { return frame_from_json(j, m); });
    s.gt_field = with_file(dir / "field.json", [m](const Json& j) { return field_from_json(j, m); });
    s.gt_field.tangent_valid = true;
    s.anchors = with_file(dir / "anchors.json", [m](const Json& j) { return anchors_from_json(j, m); });
    s.strokes = with_file(dir / "strokes.json", [](const Json& j) { return strokes_from_json(j); });
    with_file(dir / "meta.json", [&s](const Json& j) {
        auto& m = s.meta;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.attempt = j.at("attempt").get<int>();
        m.height = j.at("height").get<double>();
        m.anchor_count = j.at("anchor_count").get<int>();
        m.solver_iterations = j.at("solver_iterations").get<int>();
        m.converged = j.at("converged").get<bool>();
        m.mean_conjugacy = j.at("mean_conjugacy").get<double>();
        m.stroke_delta = j.at("stroke_delta").get<double>();
        s.transform = transform_from_json(j.at("transform"));
        return 0;
    });
    for (const auto& st : s.strokes)
        for (int f : st.faces)
            if (f < 0 || f >= m) throw ParseError(fmt::format("{}: stroke face {} out of range", (dir / "strokes.json").string(), f));
    return s;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string sample_checksum(const fs::path& dir) {
    std::string all;
    for (const char* name : kSampleFiles) {
        all += name;
        all += '\n';
        all += read_text_file(dir / name);
    }
    return sha256_hex(all);
}

Json dataset_config_to_json(const DatasetConfig& c) {
    const auto& p = c.sample.patch;
    const auto& s = c.sample;
    return {{"splits", {{"train", c.train}, {"val", c.val}, {"test", c.test}}},
            {"patch",
             {{"grid", p.grid}, {"height_min", p.height_min}, {"height_max", p.height_max}, {"warp", p.warp},
              {"resolution", p.resolution}}},
            {"sample",
             {{"min_anchors", s.min_anchors}, {"max_anchors", s.max_anchors}, {"stroke_length", s.stroke_length},
              {"max_attempts", s.max_attempts}, {"max_conjugacy", s.max_conjugacy},
              {"max_stroke_delta", s.max_stroke_delta}}},
            {"solver", solver_config_to_json(s.solver)}};
}

DatasetConfig dataset_config_from_json(const Json& j, DatasetConfig c) {
    if (!j.is_object()) throw ParseError("config: expected an object");
    try {
        if (j.contains("splits")) {
            const auto& s = j["splits"];
            c.train = s.value("train", c.train);
            c.val = s.value("val", c.val);
            c.test = s.value("test", c.test);
        }
        if (j.contains("patch")) {
            const auto& p = j["patch"];
            auto& o = c.sample.patch;
            o.grid = p.value("grid", o.grid);
            o.height_min = p.value("height_min", o.height_min);
            o.height_max = p.value("height_max", o.height_max);
            o.warp = p.value("warp", o.warp);
            o.resolution = p.value("resolution", o.resolution);
        }
        if (j.contains("sample")) {
            const auto& p = j["sample"];
            auto& o = c.sample;
            o.min_anchors = p.value("min_anchors", o.min_anchors);
            o.max_anchors = p.value("max_anchors", o.max_anchors);
            o.stroke_length = p.value("stroke_length", o.stroke_length);
            o.max_attempts = p.value("max_attempts", o.max_attempts);
            o.max_conjugacy = p.value("max_conjugacy", o.max_conjugacy);
            o.max_stroke_delta = p.value("max_stroke_delta", o.max_stroke_delta);
        }
    } catch (const Json::exception& e) {
        throw ParseError(fmt::format("config: {}", e.what()));
    }
    if (j.contains("solver")) c.sample.solver = solver_config_from_json(j["solver"], c.sample.solver);
    if (c.train < 0 || c.val < 0 || c.test < 0) throw ParseError("config.splits: counts must be >= 0");
    return c;
}

std::vector<ManifestEntry> gen_dataset(const fs::path& root, std::uint64_t seed, const DatasetConfig& config) {
    struct Job {
        std::string split;
        int index;
    };
    std::vector<Job> jobs;
    for (int i = 0; i < config.train; ++i) jobs.push_back({"train", i});
    for (int i = 0; i < config.val; ++i) jobs.push_back({"val", i});
    for (int i = 0; i < config.test; ++i) jobs.push_back({"test", i});

    const int n = static_cast<int>(jobs.size());
    std::vector<ManifestEntry> entries(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < n; ++k) {
        try {
            const std::string rel = fmt::format("{}/{:04d}", jobs[k].split, jobs[k].index);
            const DatasetSample s = make_sample(Rng::derive(seed, static_cast<std::uint64_t>(k)), config.sample);
            write_sample(s, root / rel);
            entries[k] = {rel, jobs[k].split, sample_checksum(root / rel)};
            log().info("sample {} written", rel);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    Json samples = Json::array();
    for (const auto& e : entries) samples.push_back({{"dir", e.dir}, {"split", e.split}, {"checksum", e.checksum}});
    const Json manifest = {{"version", 1}, {"seed", seed}, {"config", dataset_config_to_json(config)}, {"samples", samples}};
    write_text_file(root / "manifest.json", dump(manifest));
    return entries;
}

std::vector<fs::path> manifest_samples(const fs::path& root, const std::string& split) {
    const Json m = read_json_file(root / "manifest.json");
    std::vector<fs::path> out;
    try {
        for (const auto& e : m.at("samples"))
            if (split.empty() || e.at("split").get<std::string>() == split) out.push_back(root / e.at("dir").get<std::string>());
    } catch (const Json::exception& e) {
        throw ParseError(fmt::format("{}: {}", (root / "manifest.json").string(), e.what()));
    }
    return out;
}

}  // namespace cdf
