#pragma once

// JSON encodings shared by the dataset files, the CLI and the HTTP service.
// Decoders throw ParseError with a path to the offending value, for example
// "strokes[0].points".

#include "cdf/energy.hpp"
#include "cdf/eval.hpp"
#include "cdf/quad.hpp"
#include "cdf/solver.hpp"
#include "cdf/stroke_types.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace cdf {

using Json = nlohmann::json;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j, const std::string& path);

Json field_to_json(const DirectionField& field);
/// expected_faces < 0 accepts any length.
DirectionField field_from_json(const Json& j, int expected_faces = -1);

Json frame_to_json(const CurvatureFrame& frame);
CurvatureFrame frame_from_json(const Json& j, int expected_faces = -1);

Json anchors_to_json(const std::vector<Anchor>& anchors);
std::vector<Anchor> anchors_from_json(const Json& j, int face_count = -1);

/// {"strokes":[{"points":[...], "faces":[...]}]}; faces are omitted when a
/// stroke has none.
Json strokes_to_json(const std::vector<Stroke>& strokes);
std::vector<Stroke> strokes_from_json(const Json& j);
std::vector<Polyline> polylines(const std::vector<Stroke>& strokes);

Json mesh_to_json(const TriMesh& mesh, const std::vector<Vec3>& vertex_normals);
Json transform_to_json(const NormalizeTransform& t);
NormalizeTransform transform_from_json(const Json& j);

Json breakdown_to_json(const EnergyBreakdown& b);
Json weights_to_json(const EnergyWeights& w);
Json solver_config_to_json(const SolverConfig& c);
/// Keys present in `j` override the corresponding fields of `base`.
SolverConfig solver_config_from_json(const Json& j, SolverConfig base = {});

Json quad_to_json(const QuadMesh& quad);
QuadMesh quad_from_json(const Json& j);
Json planarity_to_json(const PlanarityReport& r);
Json singularities_to_json(const SingularityReport& r);
Json eval_report_to_json(const EvalReport& r);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Pretty-printed with a trailing newline.
std::string dump(const Json& j);

}  // namespace cdf
