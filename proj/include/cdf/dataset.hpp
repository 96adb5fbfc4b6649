#pragma once

#include "cdf/serialize.hpp"
#include "cdf/solver.hpp"
#include "cdf/strokes.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cdf {

/// Clamped uniform bicubic B-spline patch over [0, 1]^2.
struct BSplinePatch {
    int grid = 0;
    std::vector<Vec3> control;  // control[i * grid + j], i along s
    std::vector<double> knots;  // shared by both parameter directions
    double height = 0.0;        // drawn z amplitude of the control net

    Vec3 evaluate(double s, double t) const;
    const Vec3& at(int i, int j) const { return control[static_cast<std::size_t>(i * grid + j)]; }
};

/// Clamped uniform knot vector for `count` control points of degree 3.
std::vector<double> clamped_uniform_knots(int count);

struct PatchConfig {
    int grid = 7;
    double height_min = 0.1;
    double height_max = 0.5;
    double warp = 0.15;
    int resolution = 51;  // samples per parameter direction
};

BSplinePatch gen_patch(Rng& rng, const PatchConfig& config);

/// resolution^2 vertices; each parameter cell is split along its shorter
/// diagonal.
TriMesh sample_patch(const BSplinePatch& patch, int resolution = 51);

struct SampleConfig {
    PatchConfig patch;
    SolverConfig solver;
    int min_anchors = 1;
    int max_anchors = 5;
    double stroke_length = 0.8;  // per stroke, times the bounding-box diagonal
    int max_attempts = 20;
    double max_conjugacy = 1e-3;    // mean |r| gate
    double max_stroke_delta = 2.0;  // degrees
};

struct SampleMeta {
    std::uint64_t seed = 0;
    int attempt = 0;
    double height = 0.0;
    int anchor_count = 0;
    int solver_iterations = 0;
    bool converged = false;
    double mean_conjugacy = 0.0;
    double stroke_delta = 0.0;
};

struct DatasetSample {
    TriMesh mesh;
    NormalizeTransform transform;
    CurvatureFrame frame;
    DirectionField gt_field;
    std::vector<Anchor> anchors;
    std::vector<Stroke> strokes;
    SampleMeta meta;
};

/// Generates one sample. Attempt k draws from Rng::derive(seed, k); rejected
/// attempts are logged and retried up to config.max_attempts.
DatasetSample make_sample(std::uint64_t seed, const SampleConfig& config);

/// Mean |conjugacy residual| of a field.
double mean_conjugacy(const DirectionField& field, const CurvatureFrame& frame);

/// Per anchor, one streamline of each family through the anchor face
/// centroid, traced both ways with half of `max_length` per direction.
std::vector<Stroke> anchor_strokes(const DirectionField& field, const SurfaceGeometry& geom,
                                   const std::vector<Anchor>& anchors, double max_length);

inline constexpr const char* kSampleFiles[] = {"mesh.obj",    "frame.json",   "field.json",
                                               "anchors.json", "strokes.json", "meta.json"};

void write_sample(const DatasetSample& sample, const std::filesystem::path& dir);
DatasetSample read_sample(const std::filesystem::path& dir);

/// SHA-256 over the sample files in kSampleFiles order, as lowercase hex.
std::string sample_checksum(const std::filesystem::path& dir);
std::string sha256_hex(std::string_view data);

struct DatasetConfig {
    int train = 200;
    int val = 20;
    int test = 20;
    SampleConfig sample;
};

struct ManifestEntry {
    std::string dir;  // relative to the dataset root
    std::string split;
    std::string checksum;
};

/// Writes every split under `root` plus manifest.json. Sample i (counting
/// train, then val, then test) uses seed Rng::derive(seed, i).
std::vector<ManifestEntry> gen_dataset(const std::filesystem::path& root, std::uint64_t seed,
                                       const DatasetConfig& config);

Json dataset_config_to_json(const DatasetConfig& config);
/// Keys present in `j` override the corresponding fields of `base`.
DatasetConfig dataset_config_from_json(const Json& j, DatasetConfig base = {});

/// Sample directories of one split listed in root/manifest.json; an empty
/// split name lists all.
std::vector<std::filesystem::path> manifest_samples(const std::filesystem::path& root, const std::string& split = "");

}  // namespace cdf
