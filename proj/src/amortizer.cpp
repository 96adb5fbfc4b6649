#include "cdf/amortizer.hpp"
#include "cdf/log.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <numeric>

namespace cdf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Shape {
    const char* name;
    int out, in;
};

constexpr std::array<Shape, 10> kArchitecture{{{"enc1", 64, 9},
                                               {"enc2", 128, 64},
                                               {"enc3", 128, 128},
                                               {"global", 128, 128},
                                               {"u1", 128, 256},
                                               {"u2", 64, 128},
                                               {"u3", 3, 64},
                                               {"v1", 128, 256},
                                               {"v2", 64, 128},
                                               {"v3", 3, 64}}};

enum LayerId { Enc1, Enc2, Enc3, Global, U1, U2, U3, V1, V2, V3 };

MatrixXd relu(const MatrixXd& a) { return a.cwiseMax(0.0); }
MatrixXd relu_mask(const MatrixXd& a) { return (a.array() > 0.0).cast<double>().matrix(); }

struct HeadCache {
    MatrixXd P, Z1, R1, Z2, R2, O;
};

struct Forward {
    MatrixXd X, A1, H1, A2, H2, A3, H3;
    VectorXd g0, gA, g;
    std::array<HeadCache, 2> heads;
};

Forward forward(const PredictorParams& params, const PredictorInput& input) {
    const auto& L = params.layers;
    const auto& tris = input.geom.mesh.triangles;
    const int n = input.geom.vertex_count();
    const int m = input.geom.face_count();
    if (input.features.rows() != n) throw GeometryError("feature rows do not match vertex count");
    Forward f;
    f.X = input.features.transpose();
    f.A1 = (L[Enc1].W * f.X).colwise() + L[Enc1].b;
    f.H1 = relu(f.A1);
    f.A2 = (L[Enc2].W * f.H1).colwise() + L[Enc2].b;
    f.H2 = relu(f.A2);
    f.A3 = (L[Enc3].W * f.H2).colwise() + L[Enc3].b;
    f.H3 = relu(f.A3);
    f.g0 = f.H3.rowwise().mean();
    f.gA = L[Global].W * f.g0 + L[Global].b;
    f.g = f.gA.cwiseMax(0.0);

    for (int h = 0; h < 2; ++h) {
        const Layer& l1 = L[h == 0 ? U1 : V1];
        const Layer& l2 = L[h == 0 ? U2 : V2];
        const Layer& l3 = L[h == 0 ? U3 : V3];
        HeadCache& c = f.heads[h];
        // The first head layer is linear, so it is applied per vertex before
        // the face average; the global half is shared by all faces.
        c.P = l1.W.leftCols(128) * f.H3;
        const VectorXd shared = l1.W.rightCols(128) * f.g + l1.b;
        c.Z1.resize(128, m);
        for (int j = 0; j < m; ++j)
            c.Z1.col(j) = (c.P.col(tris[j][0]) + c.P.col(tris[j][1]) + c.P.col(tris[j][2])) / 3.0 + shared;
        c.R1 = relu(c.Z1);
        c.Z2 = (l2.W * c.R1).colwise() + l2.b;
        c.R2 = relu(c.Z2);
        c.O = (l3.W * c.R2).colwise() + l3.b;
    }
    return f;
}

Vec3 unit_output(const MatrixXd& O, int j, const char* head) {
    const Vec3 o = O.col(j);
    const double len = o.norm();
    if (!(len > 0.0) || !std::isfinite(len))
        throw NumericalError(fmt::format("predictor head {} produced a zero or non-finite vector at face {}", head, j));
    return o / len;
}

}  // namespace

PredictorParams PredictorParams::init(std::uint64_t seed) {
    Rng rng(seed);
    PredictorParams p;
    for (const auto& s : kArchitecture) {
        Layer l{s.name, MatrixXd(s.out, s.in), VectorXd::Zero(s.out)};
        const double bound = std::sqrt(6.0 / (s.in + s.out));
        for (int c = 0; c < s.in; ++c)
            for (int r = 0; r < s.out; ++r) l.W(r, c) = rng.uniform(-bound, bound);
        p.layers.push_back(std::move(l));
    }
    return p;
}

PredictorParams PredictorParams::zeros() {
    PredictorParams p;
    for (const auto& s : kArchitecture) p.layers.push_back({s.name, MatrixXd::Zero(s.out, s.in), VectorXd::Zero(s.out)});
    return p;
}

void PredictorParams::check_shapes() const {
    if (layers.size() != kArchitecture.size())
        throw Error(fmt::format("expected {} layers, got {}", kArchitecture.size(), layers.size()));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& s = kArchitecture[i];
        const auto& l = layers[i];
        if (l.name != s.name || l.W.rows() != s.out || l.W.cols() != s.in || l.b.size() != s.out)
            throw Error(fmt::format("layer {} ('{}' {}x{}) does not match '{}' {}x{}", i, l.name, l.W.rows(), l.W.cols(),
                                    s.name, s.out, s.in));
    }
}

std::size_t PredictorParams::size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
}

double& PredictorParams::coeff(std::size_t i) {
    for (auto& l : layers) {
        const auto w = static_cast<std::size_t>(l.W.size());
        if (i < w) return l.W.data()[i];
        i -= w;
        const auto b = static_cast<std::size_t>(l.b.size());
        if (i < b) return l.b.data()[i];
        i -= b;
    }
    throw Error("parameter index out of range");
}

double PredictorParams::coeff(std::size_t i) const { return const_cast<PredictorParams*>(this)->coeff(i); }

PredictorInput make_input(TriMesh mesh, const std::vector<Polyline>& strokes) {
    PredictorInput in{SurfaceGeometry::build(std::move(mesh)), {}};
    const StrokeFeatures sf = stroke_projection_features(in.geom.mesh, strokes);
    in.features = build_vertex_features(in.geom.mesh, in.geom.vertex_normals, sf);
    return in;
}

DirectionField predict(const PredictorParams& params, const PredictorInput& input) {
    params.check_shapes();
    const Forward f = forward(params, input);
    const int m = input.geom.face_count();
    DirectionField field(m);
    for (int j = 0; j < m; ++j) {
        field.u[j] = unit_output(f.heads[0].O, j, "u");
        field.v[j] = unit_output(f.heads[1].O, j, "v");
    }
    return field;
}

TrainItem make_train_item(const DatasetSample& sample) {
    TrainItem item;
    const auto lines = polylines(sample.strokes);
    item.input = make_input(sample.mesh, lines);
    item.gt = sample.gt_field;
    item.strokes = assign_segments(item.input.geom, lines);
    return item;
}

EnergyBreakdown predictor_loss(const PredictorParams& params, const TrainItem& item, const EnergyWeights& weights,
                               PredictorParams* grad) {
    params.check_shapes();
    const Forward f = forward(params, item.input);
    const int m = item.input.geom.face_count();
    DirectionField field(m);
    for (int j = 0; j < m; ++j) {
        field.u[j] = unit_output(f.heads[0].O, j, "u");
        field.v[j] = unit_output(f.heads[1].O, j, "v");
    }

    EnergyWeights w = weights;
    w.reg = 0.0;
    w.conj = 0.0;
    const bool has_strokes = item.strokes.segment_count() > 0;
    const EnergyInputs in{&item.input.geom, nullptr, &item.gt, has_strokes ? &item.strokes : nullptr};
    FieldGradient fg(m);
    EnergyBreakdown b = grad ? total_gradient(field, in, w, fg) : total_energy(field, in, w);

    // Length regularizer on the raw outputs; normalized vectors would make it vanish.
    double reg = 0.0;
    for (int h = 0; h < 2; ++h)
        for (int j = 0; j < m; ++j) {
            const double d = f.heads[h].O.col(j).norm() - 1.0;
            reg += d * d;
        }
    b.reg = reg / m;
    b.total += weights.reg * b.reg;
    if (!grad) return b;

    grad->check_shapes();
    auto& G = grad->layers;
    const auto& L = params.layers;
    const auto& tris = item.input.geom.mesh.triangles;
    const int n = item.input.geom.vertex_count();
    MatrixXd dH3 = MatrixXd::Zero(128, n);
    VectorXd dg = VectorXd::Zero(128);

    for (int h = 0; h < 2; ++h) {
        const HeadCache& c = f.heads[h];
        const auto& ghat = h == 0 ? fg.du : fg.dv;
        MatrixXd dO(3, m);
        for (int j = 0; j < m; ++j) {
            const Vec3 o = c.O.col(j);
            const double len = o.norm();
            const Vec3 uh = o / len;
            dO.col(j) = (ghat[j] - uh.dot(ghat[j]) * uh) / len + (2.0 * weights.reg * (len - 1.0) / (len * m)) * o;
        }
        const int i1 = h == 0 ? U1 : V1, i2 = h == 0 ? U2 : V2, i3 = h == 0 ? U3 : V3;
        G[i3].W += dO * c.R2.transpose();
        G[i3].b += dO.rowwise().sum();
        const MatrixXd dZ2 = (L[i3].W.transpose() * dO).cwiseProduct(relu_mask(c.Z2));
        G[i2].W += dZ2 * c.R1.transpose();
        G[i2].b += dZ2.rowwise().sum();
        const MatrixXd dZ1 = (L[i2].W.transpose() * dZ2).cwiseProduct(relu_mask(c.Z1));
        const VectorXd dshared = dZ1.rowwise().sum();
        G[i1].b += dshared;
        G[i1].W.rightCols(128) += dshared * f.g.transpose();
        dg += L[i1].W.rightCols(128).transpose() * dshared;
        MatrixXd dP = MatrixXd::Zero(128, n);
        for (int j = 0; j < m; ++j) {
            const VectorXd share = dZ1.col(j) / 3.0;
            for (int k = 0; k < 3; ++k) dP.col(tris[j][k]) += share;
        }
        G[i1].W.leftCols(128) += dP * f.H3.transpose();
        dH3 += L[i1].W.leftCols(128).transpose() * dP;
    }

    const VectorXd dgA = dg.cwiseProduct((f.gA.array() > 0.0).cast<double>().matrix());
    G[Global].W += dgA * f.g0.transpose();
    G[Global].b += dgA;
    const VectorXd dg0 = L[Global].W.transpose() * dgA;
    dH3.colwise() += dg0 / static_cast<double>(n);

    const MatrixXd dA3 = dH3.cwiseProduct(relu_mask(f.A3));
    G[Enc3].W += dA3 * f.H2.transpose();
    G[Enc3].b += dA3.rowwise().sum();
    const MatrixXd dA2 = (L[Enc3].W.transpose() * dA3).cwiseProduct(relu_mask(f.A2));
    G[Enc2].W += dA2 * f.H1.transpose();
    G[Enc2].b += dA2.rowwise().sum();
    const MatrixXd dA1 = (L[Enc2].W.transpose() * dA2).cwiseProduct(relu_mask(f.A1));
    G[Enc1].W += dA1 * f.X.transpose();
    G[Enc1].b += dA1.rowwise().sum();
    return b;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw Error("train: epochs must be >= 1");
    if (!(lr > 0.0)) throw Error("train: lr must be > 0");
}

TrainResult train(const std::vector<TrainItem>& items, const TrainConfig& config, const PredictorParams* start) {
    config.validate();
    if (items.empty()) throw Error("train: empty dataset");
    TrainResult result;
    result.params = start ? *start : PredictorParams::init(config.seed);
    result.params.check_shapes();
    PredictorParams m1 = PredictorParams::zeros(), m2 = PredictorParams::zeros();
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Rng rng(Rng::derive(config.seed, 1));
    std::vector<int> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    long step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
        EnergyBreakdown sum;
        for (int idx : order) {
            PredictorParams g = PredictorParams::zeros();
            const EnergyBreakdown e = predictor_loss(result.params, items[idx], config.weights, &g);
            if (!std::isfinite(e.total)) throw NumericalError(fmt::format("train: non-finite loss at epoch {}", epoch + 1));
            ++step;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
            for (std::size_t l = 0; l < g.layers.size(); ++l) {
                auto update = [&](auto& x, auto& mom, auto& sec, const auto& gr) {
                    mom = b1 * mom + (1.0 - b1) * gr;
                    sec = b2 * sec + (1.0 - b2) * gr.cwiseProduct(gr);
                    x.array() -= config.lr * (mom.array() / c1) / ((sec.array() / c2).sqrt() + eps);
                };
                update(result.params.layers[l].W, m1.layers[l].W, m2.layers[l].W, g.layers[l].W);
                update(result.params.layers[l].b, m1.layers[l].b, m2.layers[l].b, g.layers[l].b);
            }
            sum.align += e.align;
            sum.normal += e.normal;
            sum.smooth += e.smooth;
            sum.stroke += e.stroke;
            sum.reg += e.reg;
            sum.total += e.total;
        }
        const double k = static_cast<double>(items.size());
        sum.align /= k;
        sum.normal /= k;
        sum.smooth /= k;
        sum.stroke /= k;
        sum.reg /= k;
        sum.total /= k;
        result.curve.push_back(sum);
        log().debug("epoch {}: total {:.6e}", epoch + 1, sum.total);
    }
    return result;
}

std::string curve_csv(const std::vector<EnergyBreakdown>& curve) {
    std::string out = "epoch,align,normal,smooth,stroke,reg,total\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& e = curve[i];
        out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", i + 1, e.align, e.normal, e.smooth,
                           e.stroke, e.reg, e.total);
    }
    return out;
}

Json params_to_json(const PredictorParams& params) {
    Json layers = Json::array();
    for (const auto& l : params.layers) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.W.size()));
        for (int r = 0; r < l.W.rows(); ++r)
            for (int c = 0; c < l.W.cols(); ++c) w.push_back(l.W(r, c));
        layers.push_back({{"name", l.name},
                          {"rows", l.W.rows()},
                          {"cols", l.W.cols()},
                          {"W", w},
                          {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())}});
    }
    return {{"version", 1}, {"architecture", "mlp-9-64-128-128-g128-h256-128-64-3"}, {"layers", layers}};
}

PredictorParams params_from_json(const Json& j) {
    PredictorParams p;
    try {
        if (j.at("version").get<int>() != 1) throw ParseError("params: unsupported version");
        for (const auto& e : j.at("layers")) {
            Layer l;
            l.name = e.at("name").get<std::string>();
            const int rows = e.at("rows").get<int>(), cols = e.at("cols").get<int>();
            const auto w = e.at("W").get<std::vector<double>>();
            const auto b = e.at("b").get<std::vector<double>>();
            if (rows < 0 || cols < 0 || w.size() != static_cast<std::size_t>(rows) * cols || b.size() != static_cast<std::size_t>(rows))
                throw ParseError(fmt::format("params: layer '{}' has inconsistent sizes", l.name));
            l.W.resize(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) l.W(r, c) = w[static_cast<std::size_t>(r) * cols + c];
            l.b = Eigen::Map<const VectorXd>(b.data(), rows);
            p.layers.push_back(std::move(l));
        }
    } catch (const Json::exception& e) {
        throw ParseError(fmt::format("params: {}", e.what()));
    }
    try {
        p.check_shapes();
    } catch (const Error& e) {
        throw ParseError(fmt::format("params: {}", e.what()));
    }
    return p;
}

void save_params(const PredictorParams& params, const std::filesystem::path& path) {
    write_text_file(path, params_to_json(params).dump() + "\n");
}

PredictorParams load_params(const std::filesystem::path& path) {
    try {
        return params_from_json(read_json_file(path));
    } catch (const ParseError& e) {
        const std::string what = e.what();
        if (what.starts_with(path.string())) throw;
        throw ParseError(fmt::format("{}: {}", path.string(), what));
    }
}

}  // namespace cdf
