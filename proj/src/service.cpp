#include "cdf/service.hpp"
#include "cdf/dataset.hpp"
#include "cdf/eval.hpp"
#include "cdf/log.hpp"
#include "cdf/strokes.hpp"

#include "httplib.h"

#include <fmt/format.h>

#include <regex>

namespace cdf {

namespace fs = std::filesystem;

struct Service::Session {
    std::string id;
    SurfaceGeometry geom;
    CurvatureFrame frame;

    std::mutex mutex;
    std::vector<Polyline> strokes;
    StrokeAssignment assignment;
    std::optional<DirectionField> field;
    std::string field_id;
    std::atomic<bool> solving{false};
};

namespace {

struct HttpError {
    int status;
    std::string message;
};

[[noreturn]] void http_error(int status, std::string message) { throw HttpError{status, std::move(message)}; }

ServiceResponse ok(Json body) { return {200, std::move(body)}; }

const Json& body_object(const Json& body) {
    if (!body.is_object()) http_error(400, "body: expected a JSON object");
    return body;
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {
    if (!options_.data_dir.empty()) {
        fs::create_directories(options_.data_dir);
        restore();
    }
}

Service::~Service() = default;

ServiceResponse Service::handle(const std::string& method, const std::string& path, const std::string& body) {
    static const std::regex sessions(R"(^/api/sessions/?$)");
    static const std::regex session_op(R"(^/api/sessions/([A-Za-z0-9_-]+)/(mesh|strokes|solve|streamlines|quads)$)");
    static const std::regex planarize_op(R"(^/api/quads/([A-Za-z0-9_-]+)/planarize$)");

    ServiceResponse r;
    try {
        Json json = Json::object();
        if ((method == "POST" || method == "PUT") && !body.empty()) {
            try {
                json = Json::parse(body);
            } catch (const Json::parse_error& e) {
                http_error(400, fmt::format("body: invalid JSON ({})", e.what()));
            }
        }
        auto expect = [&](const char* m) {
            if (method != m) http_error(405, fmt::format("{} not allowed on {}", method, path));
        };
        std::smatch match;
        if (std::regex_match(path, sessions)) {
            expect("POST");
            r = create_session(body_object(json));
        } else if (std::regex_match(path, match, session_op)) {
            const std::string op = match[2];
            const auto s = find(match[1]);
            if (op == "mesh") {
                expect("GET");
                r = get_mesh(*s);
            } else if (op == "strokes") {
                expect("PUT");
                r = put_strokes(*s, body_object(json));
            } else if (op == "solve") {
                expect("POST");
                r = solve(*s, body_object(json));
            } else if (op == "streamlines") {
                expect("POST");
                r = streamlines(*s, body_object(json));
            } else {
                expect("POST");
                r = quads(*s, body_object(json));
            }
        } else if (std::regex_match(path, match, planarize_op)) {
            expect("POST");
            r = planarize_quad(match[1], body_object(json));
        } else {
            http_error(404, fmt::format("no route for {}", path));
        }
    } catch (const HttpError& e) {
        r = {e.status, {{"error", e.message}}};
    } catch (const ParseError& e) {
        r = {400, {{"error", e.what()}}};
    } catch (const std::exception& e) {
        r = {422, {{"error", e.what()}}};
    }
    r.body["revision"] = ++revision_;
    return r;
}

void Service::bind(httplib::Server& server) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        const ServiceResponse r = handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(R"(/api/.*)", handler);
    server.Post(R"(/api/.*)", handler);
    server.Put(R"(/api/.*)", handler);
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) {
    std::lock_guard lock(store_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) http_error(404, fmt::format("unknown session {}", id));
    return it->second;
}

ServiceResponse Service::create_session(const Json& body) {
    const auto it = body.find("mesh");
    if (it == body.end()) http_error(400, "mesh: missing");
    if (!it->is_string()) http_error(400, "mesh: expected OBJ text");
    auto s = std::make_shared<Session>();
    try {
        s->geom = SurfaceGeometry::build(load_mesh(it->get<std::string>()));
    } catch (const Error& e) {
        http_error(400, fmt::format("mesh: {}", e.what()));
    }
    s->frame = estimate_curvature(s->geom.mesh);
    {
        std::lock_guard lock(store_mutex_);
        s->id = fmt::format("s{}", next_session_++);
        sessions_[s->id] = s;
    }
    persist(*s);
    return ok({{"session_id", s->id}, {"n", s->geom.vertex_count()}, {"m", s->geom.face_count()}});
}

ServiceResponse Service::get_mesh(Session& s) { return ok(mesh_to_json(s.geom.mesh, s.geom.vertex_normals)); }

ServiceResponse Service::put_strokes(Session& s, const Json& body) {
    std::vector<Polyline> lines = polylines(strokes_from_json(body));
    StrokeAssignment assignment;
    try {
        assignment = assign_segments(s.geom, lines);
    } catch (const GeometryError& e) {
        http_error(400, fmt::format("strokes: {}", e.what()));
    }
    Json accepted = Json::array();
    for (const auto& a : assignment.strokes) accepted.push_back(a.segments.size());
    {
        std::lock_guard lock(s.mutex);
        s.strokes = std::move(lines);
        s.assignment = std::move(assignment);
    }
    persist(s);
    return ok({{"accepted", accepted}});
}

ServiceResponse Service::solve(Session& s, const Json& body) {
    SolverConfig base;
    base.max_iters = options_.solve_iters;
    base.allow_unconstrained = true;
    const SolverConfig config = solver_config_from_json(body.contains("config") ? body["config"] : Json(), base);

    if (s.solving.exchange(true)) http_error(409, fmt::format("a solve is already running for session {}", s.id));
    struct Release {
        std::atomic<bool>& flag;
        ~Release() { flag = false; }
    } release{s.solving};
    if (solve_hook) solve_hook();

    StrokeAssignment assignment;
    {
        std::lock_guard lock(s.mutex);
        assignment = s.assignment;
    }
    const StrokeAssignment* strokes = assignment.segment_count() > 0 ? &assignment : nullptr;
    SolveResult result = solve_cdf(s.geom, s.frame, {}, strokes, config);

    EnergyWeights w = config.weights;
    w.conj = config.conj_final;
    const EnergyBreakdown energy = total_energy(result.field, {&s.geom, &s.frame, nullptr, strokes}, w);
    Json delta = nullptr;
    if (strokes) delta = stroke_deviation(result.field, *strokes);
    const Json sing = singularities_to_json(singularity_indices(result.field, s.geom));

    std::string field_id;
    {
        std::lock_guard lock(store_mutex_);
        field_id = fmt::format("f{}", next_field_++);
    }
    Json field = field_to_json(result.field);
    {
        std::lock_guard lock(s.mutex);
        s.field = std::move(result.field);
        s.field_id = field_id;
    }
    persist(s);
    return ok({{"field_id", field_id},
               {"field", std::move(field)},
               {"energy", breakdown_to_json(energy)},
               {"delta", delta},
               {"singularities", sing},
               {"iterations", result.iterations}});
}

ServiceResponse Service::streamlines(Session& s, const Json& body) {
    DirectionField field;
    {
        std::lock_guard lock(s.mutex);
        if (!s.field) http_error(409, fmt::format("session {} has no field yet", s.id));
        field = *s.field;
    }
    const int m = s.geom.face_count();
    struct Seed {
        int face;
        Vec3 point;
        std::vector<Family> families;
    };
    std::vector<Seed> seeds;
    if (const auto it = body.find("seeds"); it != body.end()) {
        if (!it->is_array()) http_error(400, "seeds: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const Json& e = (*it)[i];
            const std::string p = fmt::format("seeds[{}]", i);
            if (!e.is_object() || !e.contains("face") || !e["face"].is_number_integer())
                http_error(400, p + ".face: expected an integer");
            const int f = e["face"].get<int>();
            if (f < 0 || f >= m) http_error(400, p + ".face: out of range");
            Seed seed{f, face_centroid(s.geom.mesh, f), {Family::U, Family::V}};
            if (e.contains("point")) seed.point = vec3_from_json(e["point"], p + ".point");
            if (e.contains("family")) {
                const Json& fam = e["family"];
                if (fam == "u")
                    seed.families = {Family::U};
                else if (fam == "v")
                    seed.families = {Family::V};
                else
                    http_error(400, p + ".family: expected \"u\" or \"v\"");
            }
            seeds.push_back(std::move(seed));
        }
    } else {
        int count = 8;
        if (const auto c = body.find("count"); c != body.end()) {
            if (!c->is_number_integer() || c->get<int>() < 1) http_error(400, "count: expected a positive integer");
            count = c->get<int>();
        }
        count = std::min(count, m);
        for (int k = 0; k < count; ++k) {
            const int f = static_cast<int>((static_cast<long long>(2 * k + 1) * m) / (2 * count));
            seeds.push_back({f, face_centroid(s.geom.mesh, f), {Family::U, Family::V}});
        }
    }
    const TraceConfig cfg{2.0 * bounding_box_diagonal(s.geom.mesh), 20 * m};
    Json lines = Json::array();
    for (const auto& seed : seeds) {
        for (Family fam : seed.families) {
            const Stroke st = trace_both_ways(field, s.geom, seed.face, seed.point, fam, cfg);
            Json pts = Json::array();
            for (const auto& p : st.points) pts.push_back(to_json(p));
            lines.push_back({{"points", pts}, {"faces", st.faces}, {"family", fam == Family::U ? "u" : "v"}});
        }
    }
    return ok({{"polylines", lines}});
}

ServiceResponse Service::quads(Session& s, const Json& body) {
    const auto it = body.find("spacing");
    if (it == body.end()) http_error(400, "spacing: missing");
    if (!it->is_number() || !(it->get<double>() > 0.0)) http_error(400, "spacing: expected a positive number");
    DirectionField field;
    {
        std::lock_guard lock(s.mutex);
        if (!s.field) http_error(409, fmt::format("session {} has no field yet", s.id));
        field = *s.field;
    }
    QuadMesh quad = trace_quad_layout(field, s.geom, it->get<double>());
    const PlanarityReport before = planarity(quad);
    std::string id;
    Json qj = quad_to_json(quad);
    {
        std::lock_guard lock(store_mutex_);
        id = fmt::format("q{}", next_quad_++);
        quads_[id] = {std::move(quad), s.id};
    }
    return ok({{"quad_id", id}, {"quad", std::move(qj)}, {"planarity_before", planarity_to_json(before)}});
}

ServiceResponse Service::planarize_quad(const std::string& quad_id, const Json& body) {
    PlanarizeConfig cfg;
    if (const auto it = body.find("iters"); it != body.end()) {
        if (!it->is_number_integer() || it->get<int>() < 0) http_error(400, "iters: expected a non-negative integer");
        cfg.iters = it->get<int>();
    }
    StoredQuad stored;
    {
        std::lock_guard lock(store_mutex_);
        const auto it = quads_.find(quad_id);
        if (it == quads_.end()) http_error(404, fmt::format("unknown quad {}", quad_id));
        stored = it->second;
    }
    const auto session = find(stored.session);
    const PlanarizeResult r = planarize(stored.quad, &session->geom.mesh, cfg);
    return ok({{"quad", quad_to_json(r.quad)},
               {"planarity_before", planarity_to_json(r.before)},
               {"planarity_after", planarity_to_json(r.after)}});
}

void Service::persist(const Session& s) {
    if (options_.data_dir.empty()) return;
    const fs::path dir = options_.data_dir / s.id;
    fs::create_directories(dir);
    save_mesh_file(s.geom.mesh, dir / "mesh.obj");
    write_text_file(dir / "frame.json", dump(frame_to_json(s.frame)));
    std::vector<Stroke> strokes;
    for (const auto& p : s.strokes) strokes.push_back({p, {}, Stroke::Stop::None});
    write_text_file(dir / "strokes.json", dump(strokes_to_json(strokes)));
    write_text_file(dir / "anchors.json", dump(Json::array()));
    if (s.field) write_text_file(dir / "field.json", dump(field_to_json(*s.field)));
    write_text_file(dir / "meta.json", dump({{"session_id", s.id}, {"field_id", s.field_id}}));
}

void Service::restore() {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(options_.data_dir))
        if (e.is_directory() && fs::exists(e.path() / "mesh.obj")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        try {
            auto s = std::make_shared<Session>();
            s->id = dir.filename().string();
            s->geom = SurfaceGeometry::build(load_mesh_file(dir / "mesh.obj"));
            const int m = s->geom.face_count();
            s->frame = frame_from_json(read_json_file(dir / "frame.json"), m);
            if (fs::exists(dir / "strokes.json")) {
                s->strokes = polylines(strokes_from_json(read_json_file(dir / "strokes.json")));
                s->assignment = assign_segments(s->geom, s->strokes);
            }
            if (fs::exists(dir / "field.json")) s->field = field_from_json(read_json_file(dir / "field.json"), m);
            if (fs::exists(dir / "meta.json")) s->field_id = read_json_file(dir / "meta.json").value("field_id", "");
            if (s->id.size() > 1 && s->id[0] == 's')
                next_session_ = std::max(next_session_, std::atoi(s->id.c_str() + 1) + 1);
            if (s->field_id.size() > 1 && s->field_id[0] == 'f')
                next_field_ = std::max(next_field_, std::atoi(s->field_id.c_str() + 1) + 1);
            sessions_[s->id] = s;
        } catch (const std::exception& e) {
            log().warn("skipping stored session {}: {}", dir.string(), e.what());
        }
    }
}

int serve(const ServiceOptions& options, const std::string& host, int port) {
    Service service(options);
    httplib::Server server;
    service.bind(server);
    log().warn("listening on {}:{}", host, port);
    return server.listen(host, port) ? 0 : 1;
}

}  // namespace cdf
