#include "doctest.h"
#include "fixtures.hpp"

#include "cdf/amortizer.hpp"
#include "cdf/cli.hpp"
#include "cdf/dataset.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <regex>

using namespace cdf;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string err;
};

// Runs the built tool; stderr is captured, stdout discarded unless redirected
// by the arguments themselves.
Run tool(const std::string& args, const fs::path& scratch) {
    const fs::path err = scratch / "stderr.txt";
    const std::string cmd = std::string(CDF_TOOL_PATH) + " " + args + " >" + (scratch / "stdout.txt").string() +
                            " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), read_text_file(err)};
}

int in_process(std::vector<const char*> args) {
    args.insert(args.begin(), "cdf");
    return run_cli(static_cast<int>(args.size()), args.data());
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(in_process({}) == 1);
    CHECK(in_process({"frobnicate"}) == 1);
    CHECK(in_process({"solve", "--bogus"}) == 1);
    CHECK(in_process({"solve"}) == 1);
    CHECK(in_process({"solve", "--mesh", "/nonexistent/mesh.obj"}) == 1);
    CHECK(in_process({"gen-dataset", "--out", "/tmp/x", "--count", "many"}) == 1);
    CHECK(in_process({"--help"}) == 0);
    CHECK(in_process({"solve", "--help"}) == 0);
}

TEST_CASE("runtime errors exit 2") {
    fixtures::TempDir dir("cdf-cli");
    write_text_file(dir.path() / "bad.obj", "v 0 0 0\nf 1 2 3\n");
    const std::string bad = (dir.path() / "bad.obj").string();
    CHECK(in_process({"solve", "--mesh", bad.c_str(), "--allow-unconstrained"}) == 2);

    write_text_file(dir.path() / "disk.obj", save_mesh(fixtures::flat_disk(7)));
    const std::string disk = (dir.path() / "disk.obj").string();
    // No anchors or strokes without --allow-unconstrained.
    CHECK(in_process({"solve", "--mesh", disk.c_str()}) == 2);
    const Run r = tool("solve --mesh " + q(disk), dir.path());
    CHECK(r.code == 2);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("solve on the flat disk with one anchor") {
    fixtures::TempDir dir("cdf-cli");
    write_text_file(dir.path() / "disk.obj", save_mesh(fixtures::flat_disk(11)));
    write_text_file(dir.path() / "anchors.json",
                    dump(anchors_to_json({{20, Vec3(0.6, 0.8, 0), Vec3(-0.8, 0.6, 0)}})));
    const Run r = tool("solve --mesh " + q(dir.path() / "disk.obj") + " --anchors " + q(dir.path() / "anchors.json") +
                           " --out " + q(dir.path() / "field.json") + " --trace " + q(dir.path() / "trace.csv") +
                           " --iters 300",
                       dir.path());
    REQUIRE(r.code == 0);
    std::smatch m;
    REQUIRE(std::regex_search(r.err, m, std::regex(R"(total ([0-9.e+-]+))")));
    CHECK(std::stod(m[1]) <= 1e-8);
    const DirectionField f = field_from_json(read_json_file(dir.path() / "field.json"));
    for (const Vec3& u : f.u) CHECK((u - Vec3(0.6, 0.8, 0)).norm() <= 1e-9);
    CHECK(read_text_file(dir.path() / "trace.csv").rfind("iter,align,", 0) == 0);

    // Same inputs, same bytes.
    REQUIRE(tool("solve --mesh " + q(dir.path() / "disk.obj") + " --anchors " + q(dir.path() / "anchors.json") +
                     " --out " + q(dir.path() / "field2.json") + " --iters 300",
                 dir.path())
                .code == 0);
    CHECK(read_text_file(dir.path() / "field.json") == read_text_file(dir.path() / "field2.json"));
}

TEST_CASE("gen-dataset is deterministic and eval reports theta 0") {
    fixtures::TempDir dir("cdf-cli");
    const auto a = dir.path() / "a", b = dir.path() / "b";
    REQUIRE(tool("gen-dataset --out " + q(a) + " --count 3 --seed 7 --resolution 15", dir.path()).code == 0);
    REQUIRE(tool("gen-dataset --out " + q(b) + " --count 3 --seed 7 --resolution 15", dir.path()).code == 0);
    CHECK(read_text_file(a / "manifest.json") == read_text_file(b / "manifest.json"));
    const auto samples = manifest_samples(a);
    REQUIRE(samples.size() == 3);
    for (const char* name : kSampleFiles)
        CHECK(read_text_file(samples[1] / name) == read_text_file(manifest_samples(b)[1] / name));

    const Run e = tool("eval --sample " + q(samples[0]) + " --out " + q(dir.path() / "report.json") + " --csv " +
                           q(dir.path() / "report.csv"),
                       dir.path());
    REQUIRE(e.code == 0);
    const Json report = read_json_file(dir.path() / "report.json");
    CHECK(report["theta"] == 0.0);
    CHECK(report["delta"].get<double>() < 2.0);
    CHECK(read_text_file(dir.path() / "report.csv").rfind("name,", 0) == 0);

    // Field round trip: solve on the sample mesh with its strokes, then eval.
    const fs::path s0 = samples[0];
    REQUIRE(tool("solve --mesh " + q(s0 / "mesh.obj") + " --strokes " + q(s0 / "strokes.json") + " --iters 100 --out " +
                     q(dir.path() / "solved.json"),
                 dir.path())
                .code == 0);
    REQUIRE(tool("eval --sample " + q(s0) + " --field " + q(dir.path() / "solved.json") + " --out " +
                     q(dir.path() / "solved_report.json"),
                 dir.path())
                .code == 0);
    const Json sr = read_json_file(dir.path() / "solved_report.json");
    CHECK(sr["theta"].get<double>() > 0.0);

    // Trace, quads and planarize on a flat grid with a constant field.
    write_text_file(dir.path() / "grid.obj", save_mesh(fixtures::flat_grid(11, 11)));
    write_text_file(dir.path() / "const.json", dump(field_to_json(fixtures::constant_field(200))));
    REQUIRE(tool("trace --mesh " + q(dir.path() / "grid.obj") + " --field " + q(dir.path() / "const.json") +
                     " --count 3 --out " + q(dir.path() / "lines.json"),
                 dir.path())
                .code == 0);
    const auto lines = strokes_from_json(read_json_file(dir.path() / "lines.json"));
    CHECK(lines.size() == 6);
    CHECK(!lines[0].faces.empty());
    REQUIRE(tool("quads --mesh " + q(dir.path() / "grid.obj") + " --field " + q(dir.path() / "const.json") +
                     " --spacing 0.1 --out " + q(dir.path() / "quads.obj"),
                 dir.path())
                .code == 0);
    const QuadMesh qm = load_quad_obj_file(dir.path() / "quads.obj");
    CHECK(qm.quad_count() > 50);
    REQUIRE(tool("planarize --quads " + q(dir.path() / "quads.obj") + " --ref " + q(dir.path() / "grid.obj") +
                     " --iters 10 --out " + q(dir.path() / "planar.obj") + " --report " + q(dir.path() / "pl.json"),
                 dir.path())
                .code == 0);
    const Json pl = read_json_file(dir.path() / "pl.json");
    CHECK(pl.contains("before"));
    CHECK(pl["after"]["max"].get<double>() <= 1e-12);

    // Train a couple of epochs and predict.
    REQUIRE(tool("train --dataset " + q(a) + " --epochs 2 --lr 1e-3 --seed 1 --out " + q(dir.path() / "params.json") +
                     " --log " + q(dir.path() / "curve.csv"),
                 dir.path())
                .code == 0);
    CHECK(read_text_file(dir.path() / "curve.csv").rfind("epoch,", 0) == 0);
    REQUIRE(tool("predict --params " + q(dir.path() / "params.json") + " --mesh " + q(s0 / "mesh.obj") + " --strokes " +
                     q(s0 / "strokes.json") + " --out " + q(dir.path() / "pred.json"),
                 dir.path())
                .code == 0);
    const DirectionField pred = field_from_json(read_json_file(dir.path() / "pred.json"));
    CHECK(pred.size() == 2 * 14 * 14);
    for (const Vec3& u : pred.u) CHECK(std::abs(u.norm() - 1.0) <= 1e-9);
}
