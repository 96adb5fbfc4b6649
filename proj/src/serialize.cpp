#include "cdf/serialize.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace cdf {

namespace {

[[noreturn]] void fail(const std::string& path, std::string_view what) {
    throw ParseError(fmt::format("{}: {}", path, what));
}

const Json& member(const Json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

std::string child(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }
std::string item(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

double number(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) fail(path, "not finite");
    return x;
}

int integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

const Json& array(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
}

std::vector<Vec3> vec3_list(const Json& j, const std::string& path) {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(vec3_from_json(j[i], item(path, i)));
    return out;
}

std::vector<double> number_list(const Json& j, const std::string& path) {
    std::vector<double> out;
    for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(number(j[i], item(path, i)));
    return out;
}

Json vec3_list_json(const std::vector<Vec3>& v) {
    Json out = Json::array();
    for (const auto& x : v) out.push_back(to_json(x));
    return out;
}

void check_length(std::size_t got, int expected, const std::string& path) {
    if (expected >= 0 && static_cast<int>(got) != expected)
        fail(path, fmt::format("expected {} entries, got {}", expected, got));
}

}  // namespace

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail(path, "expected [x, y, z]");
    return {number(j[0], item(path, 0)), number(j[1], item(path, 1)), number(j[2], item(path, 2))};
}

Json field_to_json(const DirectionField& field) {
    return {{"u", vec3_list_json(field.u)}, {"v", vec3_list_json(field.v)}};
}

DirectionField field_from_json(const Json& j, int expected_faces) {
    DirectionField f;
    f.u = vec3_list(member(j, "u", ""), "u");
    f.v = vec3_list(member(j, "v", ""), "v");
    check_length(f.u.size(), expected_faces, "u");
    check_length(f.v.size(), static_cast<int>(f.u.size()), "v");
    return f;
}

Json frame_to_json(const CurvatureFrame& frame) {
    Json d1 = Json::array(), d2 = Json::array(), k1 = Json::array(), k2 = Json::array();
    for (const auto& e : frame.faces) {
        d1.push_back(to_json(e.d1));
        d2.push_back(to_json(e.d2));
        k1.push_back(e.k1);
        k2.push_back(e.k2);
    }
    return {{"d1", d1}, {"d2", d2}, {"k1", k1}, {"k2", k2}};
}

CurvatureFrame frame_from_json(const Json& j, int expected_faces) {
    const auto d1 = vec3_list(member(j, "d1", ""), "d1");
    const auto d2 = vec3_list(member(j, "d2", ""), "d2");
    const auto k1 = number_list(member(j, "k1", ""), "k1");
    const auto k2 = number_list(member(j, "k2", ""), "k2");
    check_length(d1.size(), expected_faces, "d1");
    const int n = static_cast<int>(d1.size());
    check_length(d2.size(), n, "d2");
    check_length(k1.size(), n, "k1");
    check_length(k2.size(), n, "k2");
    CurvatureFrame frame;
    frame.faces.resize(d1.size());
    for (std::size_t i = 0; i < d1.size(); ++i) frame.faces[i] = {d1[i], d2[i], k1[i], k2[i]};
    return frame;
}

Json anchors_to_json(const std::vector<Anchor>& anchors) {
    Json out = Json::array();
    for (const auto& a : anchors) out.push_back({{"face", a.face}, {"u", to_json(a.u)}, {"v", to_json(a.v)}});
    return out;
}

std::vector<Anchor> anchors_from_json(const Json& j, int face_count) {
    std::vector<Anchor> out;
    for (std::size_t i = 0; i < array(j, "anchors").size(); ++i) {
        const std::string p = item("anchors", i);
        Anchor a;
        a.face = integer(member(j[i], "face", p), child(p, "face"));
        if (a.face < 0 || (face_count >= 0 && a.face >= face_count)) fail(child(p, "face"), "out of range");
        a.u = vec3_from_json(member(j[i], "u", p), child(p, "u"));
        a.v = vec3_from_json(member(j[i], "v", p), child(p, "v"));
        out.push_back(a);
    }
    return out;
}

Json strokes_to_json(const std::vector<Stroke>& strokes) {
    Json list = Json::array();
    for (const auto& s : strokes) {
        Json e = {{"points", vec3_list_json(s.points)}};
        if (!s.faces.empty()) e["faces"] = s.faces;
        list.push_back(std::move(e));
    }
    return {{"strokes", list}};
}

std::vector<Stroke> strokes_from_json(const Json& j) {
    const Json& list = array(member(j, "strokes", ""), "strokes");
    std::vector<Stroke> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string p = item("strokes", i);
        Stroke s;
        const std::string pp = child(p, "points");
        const Json& pts = member(list[i], "points", p);
        if (!pts.is_array()) fail(pp, "expected an array of [x, y, z]");
        s.points = vec3_list(pts, pp);
        if (const auto it = list[i].find("faces"); it != list[i].end()) {
            const std::string fp = child(p, "faces");
            for (std::size_t k = 0; k < array(*it, fp).size(); ++k) s.faces.push_back(integer((*it)[k], item(fp, k)));
            check_length(s.faces.size(), static_cast<int>(s.points.size()), fp);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Polyline> polylines(const std::vector<Stroke>& strokes) {
    std::vector<Polyline> out;
    out.reserve(strokes.size());
    for (const auto& s : strokes) out.push_back(s.points);
    return out;
}

Json mesh_to_json(const TriMesh& mesh, const std::vector<Vec3>& vertex_normals) {
    Json faces = Json::array();
    for (const auto& t : mesh.triangles) faces.push_back({t[0], t[1], t[2]});
    return {{"positions", vec3_list_json(mesh.positions)}, {"faces", faces}, {"normals", vec3_list_json(vertex_normals)}};
}

Json transform_to_json(const NormalizeTransform& t) {
    Json rows = Json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
    return {{"rotation", rows}, {"translation", to_json(t.translation)}, {"scale", t.scale}};
}

NormalizeTransform transform_from_json(const Json& j) {
    NormalizeTransform t;
    const auto rows = vec3_list(member(j, "rotation", "transform"), "transform.rotation");
    check_length(rows.size(), 3, "transform.rotation");
    for (int r = 0; r < 3; ++r) t.rotation.row(r) = rows[r].transpose();
    t.translation = vec3_from_json(member(j, "translation", "transform"), "transform.translation");
    t.scale = number(member(j, "scale", "transform"), "transform.scale");
    return t;
}

Json breakdown_to_json(const EnergyBreakdown& b) {
    return {{"align", b.align},   {"normal", b.normal},
            {"smooth", b.smooth}, {"stroke", b.stroke},
            {"reg", b.reg},       {"conj", b.conj},
            {"total", b.total},   {"active", {{"align", b.align_active}, {"smooth", b.smooth_active},
                                              {"stroke", b.stroke_active}, {"conj", b.conj_active}}}};
}

Json weights_to_json(const EnergyWeights& w) {
    return {{"lambda1", w.normal}, {"lambda2", w.smooth}, {"lambda3", w.stroke}, {"lambda4", w.reg},
            {"lambda_conj", w.conj}};
}

Json solver_config_to_json(const SolverConfig& c) {
    return {{"weights", weights_to_json(c.weights)},
            {"max_iters", c.max_iters},
            {"step_size", c.step_size},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon},
            {"conj_initial", c.conj_initial},
            {"conj_final", c.conj_final},
            {"ramp_fraction", c.ramp_fraction},
            {"renormalize_every", c.renormalize_every},
            {"window", c.window},
            {"tolerance", c.tolerance},
            {"seed", c.seed},
            {"allow_unconstrained", c.allow_unconstrained},
            {"project_conjugate", c.project_conjugate}};
}

SolverConfig solver_config_from_json(const Json& j, SolverConfig c) {
    if (j.is_null()) return c;
    if (!j.is_object()) fail("config", "expected an object");
    auto num = [&](const char* key, double& out) {
        if (const auto it = j.find(key); it != j.end()) out = number(*it, child("config", key));
    };
    auto integ = [&](const char* key, int& out) {
        if (const auto it = j.find(key); it != j.end()) out = integer(*it, child("config", key));
    };
    if (const auto it = j.find("weights"); it != j.end()) {
        const std::string p = "config.weights";
        if (!it->is_object()) fail(p, "expected an object");
        auto w = [&](const char* key, double& out) {
            if (const auto wt = it->find(key); wt != it->end()) out = number(*wt, child(p, key));
        };
        w("lambda1", c.weights.normal);
        w("lambda2", c.weights.smooth);
        w("lambda3", c.weights.stroke);
        w("lambda4", c.weights.reg);
        w("lambda_conj", c.weights.conj);
    }
    integ("max_iters", c.max_iters);
    num("step_size", c.step_size);
    num("beta1", c.beta1);
    num("beta2", c.beta2);
    num("epsilon", c.epsilon);
    num("conj_initial", c.conj_initial);
    num("conj_final", c.conj_final);
    num("ramp_fraction", c.ramp_fraction);
    integ("renormalize_every", c.renormalize_every);
    integ("window", c.window);
    num("tolerance", c.tolerance);
    if (const auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_unsigned() && !it->is_number_integer()) fail("config.seed", "expected an integer");
        c.seed = it->get<std::uint64_t>();
    }
    if (const auto it = j.find("allow_unconstrained"); it != j.end()) {
        if (!it->is_boolean()) fail("config.allow_unconstrained", "expected a boolean");
        c.allow_unconstrained = it->get<bool>();
    }
    if (const auto it = j.find("project_conjugate"); it != j.end()) {
        if (!it->is_boolean()) fail("config.project_conjugate", "expected a boolean");
        c.project_conjugate = it->get<bool>();
    }
    try {
        c.validate();
    } catch (const Error& e) {
        fail("config", e.what());
    }
    return c;
}

Json quad_to_json(const QuadMesh& quad) {
    Json quads = Json::array();
    for (const auto& q : quad.quads) quads.push_back({q[0], q[1], q[2], q[3]});
    return {{"positions", vec3_list_json(quad.positions)}, {"quads", quads}};
}

QuadMesh quad_from_json(const Json& j) {
    QuadMesh quad;
    quad.positions = vec3_list(member(j, "positions", ""), "positions");
    const Json& qs = array(member(j, "quads", ""), "quads");
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const std::string p = item("quads", i);
        if (!qs[i].is_array() || qs[i].size() != 4) fail(p, "expected 4 vertex indices");
        quad.quads.push_back({integer(qs[i][0], item(p, 0)), integer(qs[i][1], item(p, 1)),
                              integer(qs[i][2], item(p, 2)), integer(qs[i][3], item(p, 3))});
    }
    validate(quad);
    return quad;
}

Json planarity_to_json(const PlanarityReport& r) { return {{"eta", r.eta}, {"mean", r.mean}, {"max", r.max}}; }

Json singularities_to_json(const SingularityReport& r) {
    Json list = Json::array();
    for (const auto& s : r.singularities) list.push_back({{"vertex", s.vertex}, {"index", s.index()}});
    return list;
}

Json eval_report_to_json(const EvalReport& r) {
    Json j = {{"name", r.name}, {"delta", r.delta}, {"theta", r.theta}, {"singularities", r.singularities}};
    if (r.planarity_before) j["planarity_before"] = {{"mean", r.planarity_before->mean}, {"max", r.planarity_before->max}};
    if (r.planarity_after) j["planarity_after"] = {{"mean", r.planarity_after->mean}, {"max", r.planarity_after->max}};
    return j;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("{}: cannot open", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("{}: cannot write", path.string()));
    out << text;
    if (!out) throw Error(fmt::format("{}: write failed", path.string()));
}

Json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string dump(const Json& j) { return j.dump(1) + "\n"; }

}  // namespace cdf
