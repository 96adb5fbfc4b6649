#include "cdf/cli.hpp"
#include "cdf/amortizer.hpp"
#include "cdf/dataset.hpp"
#include "cdf/eval.hpp"
#include "cdf/log.hpp"
#include "cdf/service.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <cstdio>
#include <iostream>

namespace cdf {

namespace fs = std::filesystem;

namespace {

void write_output(const fs::path& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_text_file(out, text);
}

std::string energy_line(const EnergyBreakdown& e) {
    return fmt::format("align {:.6e} normal {:.6e} smooth {:.6e} stroke {:.6e} reg {:.6e} conj {:.6e} total {:.6e}",
                       e.align, e.normal, e.smooth, e.stroke, e.reg, e.conj, e.total);
}

struct GenArgs {
    fs::path out, config;
    std::uint64_t seed = 0;
    int count = -1, val = -1, test = -1, resolution = -1;
};

int gen_dataset_cmd(const GenArgs& a) {
    DatasetConfig cfg;
    if (!a.config.empty()) cfg = dataset_config_from_json(read_json_file(a.config), cfg);
    if (a.count >= 0) {
        cfg.train = a.count;
        cfg.val = 0;
        cfg.test = 0;
    }
    if (a.val >= 0) cfg.val = a.val;
    if (a.test >= 0) cfg.test = a.test;
    if (a.resolution > 0) cfg.sample.patch.resolution = a.resolution;
    fs::create_directories(a.out);
    const auto entries = gen_dataset(a.out, a.seed, cfg);
    std::printf("%zu samples written to %s\n", entries.size(), a.out.string().c_str());
    return 0;
}

struct SolveArgs {
    fs::path mesh, strokes, anchors, out, config, trace;
    int iters = -1;
    std::optional<double> l1, l2, l3, l4, lc;
    std::optional<std::uint64_t> seed;
    bool unconstrained = false;
};

int solve_cmd(const SolveArgs& a) {
    const SurfaceGeometry geom = SurfaceGeometry::build(load_mesh_file(a.mesh));
    const CurvatureFrame frame = estimate_curvature(geom.mesh);
    SolverConfig cfg;
    if (!a.config.empty()) cfg = solver_config_from_json(read_json_file(a.config), cfg);
    if (a.iters > 0) cfg.max_iters = a.iters;
    if (a.l1) cfg.weights.normal = *a.l1;
    if (a.l2) cfg.weights.smooth = *a.l2;
    if (a.l3) cfg.weights.stroke = *a.l3;
    if (a.l4) cfg.weights.reg = *a.l4;
    if (a.lc) cfg.conj_final = *a.lc;
    if (a.seed) cfg.seed = *a.seed;
    if (a.unconstrained) cfg.allow_unconstrained = true;

    std::vector<Anchor> anchors;
    if (!a.anchors.empty()) anchors = anchors_from_json(read_json_file(a.anchors), geom.face_count());
    StrokeAssignment assignment;
    if (!a.strokes.empty()) assignment = assign_segments(geom, polylines(strokes_from_json(read_json_file(a.strokes))));
    const StrokeAssignment* strokes = assignment.segment_count() > 0 ? &assignment : nullptr;

    const SolveResult r = solve_cdf(geom, frame, anchors, strokes, cfg);
    EnergyWeights w = cfg.weights;
    w.conj = cfg.conj_final;
    const EnergyBreakdown e = total_energy(r.field, {&geom, &frame, nullptr, strokes}, w);
    write_output(a.out, dump(field_to_json(r.field)));
    if (!a.trace.empty()) {
        std::string csv = "iter,align,normal,smooth,stroke,reg,conj,total\n";
        for (std::size_t i = 0; i < r.trace.size(); ++i) {
            const auto& t = r.trace[i];
            csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", i, t.align, t.normal,
                               t.smooth, t.stroke, t.reg, t.conj, t.total);
        }
        write_text_file(a.trace, csv);
    }
    std::fprintf(stderr, "iterations %d converged %d\n%s\n", r.iterations, r.converged ? 1 : 0, energy_line(e).c_str());
    return 0;
}

struct TraceArgs {
    fs::path mesh, field, seeds, out;
    int count = 8;
    double max_length = 0.0;
};

int trace_cmd(const TraceArgs& a) {
    const SurfaceGeometry geom = SurfaceGeometry::build(load_mesh_file(a.mesh));
    const int m = geom.face_count();
    DirectionField field = field_from_json(read_json_file(a.field), m);
    field = project_tangent(field, geom);
    const TraceConfig cfg{a.max_length > 0.0 ? a.max_length : 2.0 * bounding_box_diagonal(geom.mesh), 20 * m};

    std::vector<std::pair<int, std::vector<Family>>> seeds;
    std::vector<Vec3> points;
    if (!a.seeds.empty()) {
        const Json j = read_json_file(a.seeds);
        if (!j.is_array()) throw ParseError("seeds: expected an array");
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string p = fmt::format("seeds[{}]", i);
            if (!j[i].contains("face") || !j[i]["face"].is_number_integer()) throw ParseError(p + ".face: expected an integer");
            const int f = j[i]["face"].get<int>();
            if (f < 0 || f >= m) throw ParseError(p + ".face: out of range");
            std::vector<Family> fams{Family::U, Family::V};
            if (j[i].contains("family")) fams = {j[i]["family"] == "v" ? Family::V : Family::U};
            seeds.push_back({f, fams});
            points.push_back(j[i].contains("point") ? vec3_from_json(j[i]["point"], p + ".point") : face_centroid(geom.mesh, f));
        }
    } else {
        const int count = std::min(a.count, m);
        for (int k = 0; k < count; ++k) {
            const int f = static_cast<int>((static_cast<long long>(2 * k + 1) * m) / (2 * count));
            seeds.push_back({f, {Family::U, Family::V}});
            points.push_back(face_centroid(geom.mesh, f));
        }
    }
    std::vector<Stroke> strokes;
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (Family fam : seeds[i].second) strokes.push_back(trace_both_ways(field, geom, seeds[i].first, points[i], fam, cfg));
    write_output(a.out, dump(strokes_to_json(strokes)));
    return 0;
}

bool is_json(const fs::path& p) { return p.extension() == ".json"; }

void write_quad(const fs::path& out, const QuadMesh& q) {
    write_output(out, is_json(out) ? dump(quad_to_json(q)) : save_quad_obj(q));
}

int quads_cmd(const fs::path& mesh, const fs::path& field_path, double spacing, const fs::path& out) {
    const SurfaceGeometry geom = SurfaceGeometry::build(load_mesh_file(mesh));
    const DirectionField field = project_tangent(field_from_json(read_json_file(field_path), geom.face_count()), geom);
    const QuadMesh q = trace_quad_layout(field, geom, spacing);
    write_quad(out, q);
    const PlanarityReport r = planarity(q);
    std::fprintf(stderr, "quads %d eta_mean %.6e eta_max %.6e\n", q.quad_count(), r.mean, r.max);
    return 0;
}

int planarize_cmd(const fs::path& quads, const fs::path& ref, int iters, const fs::path& out, const fs::path& report) {
    const QuadMesh q = is_json(quads) ? quad_from_json(read_json_file(quads)) : load_quad_obj_file(quads);
    std::optional<TriMesh> reference;
    if (!ref.empty()) reference = load_mesh_file(ref);
    PlanarizeConfig cfg;
    if (iters >= 0) cfg.iters = iters;
    const PlanarizeResult r = planarize(q, reference ? &*reference : nullptr, cfg);
    write_quad(out, r.quad);
    if (!report.empty())
        write_text_file(report, dump({{"before", planarity_to_json(r.before)}, {"after", planarity_to_json(r.after)}}));
    std::fprintf(stderr, "eta_mean %.6e -> %.6e, eta_max %.6e -> %.6e\n", r.before.mean, r.after.mean, r.before.max,
                 r.after.max);
    return 0;
}

int eval_cmd(const fs::path& sample_dir, const fs::path& field_path, const fs::path& out, const fs::path& csv) {
    const DatasetSample s = read_sample(sample_dir);
    const SurfaceGeometry geom = SurfaceGeometry::build(s.mesh);
    const DirectionField field =
        field_path.empty() ? s.gt_field : field_from_json(read_json_file(field_path), geom.face_count());
    const StrokeAssignment strokes = assign_segments(geom, polylines(s.strokes));
    EvalReport r = evaluate(geom, s.gt_field, strokes, field);
    r.name = sample_dir.filename().string();
    write_output(out, dump(eval_report_to_json(r)));
    if (!csv.empty()) write_text_file(csv, eval_csv({r}));
    return 0;
}

struct TrainArgs {
    fs::path dataset, out, log;
    std::string split = "train";
    int epochs = 200;
    double lr = 1e-4;
    std::uint64_t seed = 0;
};

int train_cmd(const TrainArgs& a) {
    std::vector<TrainItem> items;
    for (const auto& dir : manifest_samples(a.dataset, a.split)) items.push_back(make_train_item(read_sample(dir)));
    if (items.empty()) throw Error(fmt::format("no samples in split '{}' of {}", a.split, a.dataset.string()));
    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.lr = a.lr;
    cfg.seed = a.seed;
    const TrainResult r = train(items, cfg);
    save_params(r.params, a.out);
    if (!a.log.empty()) write_text_file(a.log, curve_csv(r.curve));
    std::fprintf(stderr, "loss %.6e -> %.6e over %d epochs\n", r.curve.front().total, r.curve.back().total, a.epochs);
    return 0;
}

int predict_cmd(const fs::path& params_path, const fs::path& mesh, const fs::path& strokes, const fs::path& out) {
    const PredictorParams params = load_params(params_path);
    std::vector<Polyline> lines;
    if (!strokes.empty()) lines = polylines(strokes_from_json(read_json_file(strokes)));
    const PredictorInput input = make_input(load_mesh_file(mesh), lines);
    write_output(out, dump(field_to_json(predict(params, input))));
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Stroke-guided conjugate direction fields", "cdf"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-dataset", "Generate the synthetic dataset");
    g->add_option("--out", gen.out, "Dataset root")->required();
    g->add_option("--seed", gen.seed, "Master seed");
    g->add_option("--count", gen.count, "Number of samples (all in the train split)");
    g->add_option("--val", gen.val, "Validation samples");
    g->add_option("--test", gen.test, "Test samples");
    g->add_option("--resolution", gen.resolution, "Samples per patch direction");
    g->add_option("--config", gen.config, "Dataset config JSON")->check(CLI::ExistingFile);

    SolveArgs sa;
    auto* s = app.add_subcommand("solve", "Solve for a conjugate direction field");
    s->add_option("--mesh", sa.mesh)->required()->check(CLI::ExistingFile);
    s->add_option("--strokes", sa.strokes)->check(CLI::ExistingFile);
    s->add_option("--anchors", sa.anchors)->check(CLI::ExistingFile);
    s->add_option("--out", sa.out, "Field JSON (stdout if omitted)");
    s->add_option("--config", sa.config, "Solver config JSON")->check(CLI::ExistingFile);
    s->add_option("--trace", sa.trace, "Energy trace CSV");
    s->add_option("--iters", sa.iters);
    s->add_option("--lambda1", sa.l1);
    s->add_option("--lambda2", sa.l2);
    s->add_option("--lambda3", sa.l3);
    s->add_option("--lambda4", sa.l4);
    s->add_option("--lambda-conj", sa.lc, "Final conjugacy weight");
    s->add_option("--seed", sa.seed);
    s->add_flag("--allow-unconstrained", sa.unconstrained, "Solve without anchors or strokes");

    TraceArgs ta;
    auto* t = app.add_subcommand("trace", "Trace streamlines of a field");
    t->add_option("--mesh", ta.mesh)->required()->check(CLI::ExistingFile);
    t->add_option("--field", ta.field)->required()->check(CLI::ExistingFile);
    t->add_option("--seeds", ta.seeds, "Seeds JSON [{face, point?, family?}]")->check(CLI::ExistingFile);
    t->add_option("--count", ta.count, "Number of evenly spread seeds when --seeds is absent");
    t->add_option("--max-length", ta.max_length);
    t->add_option("--out", ta.out);

    fs::path q_mesh, q_field, q_out;
    double q_spacing = 0.05;
    auto* q = app.add_subcommand("quads", "Trace a quad layout");
    q->add_option("--mesh", q_mesh)->required()->check(CLI::ExistingFile);
    q->add_option("--field", q_field)->required()->check(CLI::ExistingFile);
    q->add_option("--spacing", q_spacing);
    q->add_option("--out", q_out, "Quad OBJ, or JSON when the name ends in .json");

    fs::path p_quads, p_ref, p_out, p_report;
    int p_iters = -1;
    auto* p = app.add_subcommand("planarize", "Planarize a quad mesh");
    p->add_option("--quads", p_quads)->required()->check(CLI::ExistingFile);
    p->add_option("--ref", p_ref, "Reference triangle mesh")->check(CLI::ExistingFile);
    p->add_option("--iters", p_iters);
    p->add_option("--out", p_out);
    p->add_option("--report", p_report, "Planarity report JSON");

    fs::path e_sample, e_field, e_out, e_csv;
    auto* e = app.add_subcommand("eval", "Evaluate a field against a dataset sample");
    e->add_option("--sample", e_sample)->required()->check(CLI::ExistingDirectory);
    e->add_option("--field", e_field, "Field JSON (defaults to the sample's ground truth)")->check(CLI::ExistingFile);
    e->add_option("--out", e_out);
    e->add_option("--csv", e_csv);

    TrainArgs tr;
    auto* trc = app.add_subcommand("train", "Train the predictor");
    trc->add_option("--dataset", tr.dataset)->required()->check(CLI::ExistingDirectory);
    trc->add_option("--split", tr.split);
    trc->add_option("--epochs", tr.epochs);
    trc->add_option("--lr", tr.lr);
    trc->add_option("--seed", tr.seed);
    trc->add_option("--log", tr.log, "Loss curve CSV");
    trc->add_option("--out", tr.out)->required();

    fs::path pr_params, pr_mesh, pr_strokes, pr_out;
    auto* pr = app.add_subcommand("predict", "Predict a field with trained parameters");
    pr->add_option("--params", pr_params)->required()->check(CLI::ExistingFile);
    pr->add_option("--mesh", pr_mesh)->required()->check(CLI::ExistingFile);
    pr->add_option("--strokes", pr_strokes)->check(CLI::ExistingFile);
    pr->add_option("--out", pr_out);

    ServiceOptions so;
    int port = 8080;
    std::string host = "127.0.0.1";
    auto* sv = app.add_subcommand("serve", "Run the HTTP service");
    sv->add_option("--port", port);
    sv->add_option("--host", host);
    sv->add_option("--data-dir", so.data_dir);
    sv->add_option("--solve-iters", so.solve_iters);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*g) return gen_dataset_cmd(gen);
        if (*s) return solve_cmd(sa);
        if (*t) return trace_cmd(ta);
        if (*q) return quads_cmd(q_mesh, q_field, q_spacing, q_out);
        if (*p) return planarize_cmd(p_quads, p_ref, p_iters, p_out, p_report);
        if (*e) return eval_cmd(e_sample, e_field, e_out, e_csv);
        if (*trc) return train_cmd(tr);
        if (*pr) return predict_cmd(pr_params, pr_mesh, pr_strokes, pr_out);
        if (*sv) return serve(so, host, port) == 0 ? 0 : 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 1;
}

}  // namespace cdf
