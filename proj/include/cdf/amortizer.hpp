#pragma once

// Feed-forward predictor from per-vertex features to a per-face direction
// pair, trained on the field energies:
//
//   encoder   9 -> 64 -> 128 -> 128 per vertex (ReLU)
//   global    mean over vertices, 128 -> 128 (ReLU)
//   fusion    [local 128, global 128] per vertex, averaged per face
//   heads     256 -> 128 -> 64 -> 3, one for u and one for v
//
// Head outputs are normalized to unit length.

#include "cdf/dataset.hpp"
#include "cdf/energy.hpp"
#include "cdf/serialize.hpp"
#include "cdf/strokes.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cdf {

struct Layer {
    std::string name;
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
};

struct PredictorParams {
    std::vector<Layer> layers;

    /// Layers in the fixed order enc1, enc2, enc3, global, u1, u2, u3, v1, v2, v3
    /// with Xavier-uniform weights and zero biases.
    static PredictorParams init(std::uint64_t seed);
    /// Same shapes, all zeros.
    static PredictorParams zeros();

    /// Throws if names or shapes differ from the architecture.
    void check_shapes() const;

    std::size_t size() const;
    /// Flat access: each layer's W (column-major) then b, in layer order.
    double& coeff(std::size_t i);
    double coeff(std::size_t i) const;
};

struct PredictorInput {
    SurfaceGeometry geom;
    VertexFeatures features;
};

PredictorInput make_input(TriMesh mesh, const std::vector<Polyline>& strokes);

/// Unit-length u, v per face. Throws NumericalError when a head outputs a
/// zero vector.
DirectionField predict(const PredictorParams& params, const PredictorInput& input);

struct TrainItem {
    PredictorInput input;
    DirectionField gt;
    StrokeAssignment strokes;
};

TrainItem make_train_item(const DatasetSample& sample);

/// Training objective on one item: alignment, normal, smoothness and stroke
/// terms on the normalized prediction plus the length regularizer on the raw
/// head outputs. Adds d(total)/d(params) into `grad` when given.
EnergyBreakdown predictor_loss(const PredictorParams& params, const TrainItem& item, const EnergyWeights& weights,
                               PredictorParams* grad = nullptr);

struct TrainConfig {
    int epochs = 200;
    double lr = 1e-4;
    EnergyWeights weights;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    PredictorParams params;
    std::vector<EnergyBreakdown> curve;  // mean over items, per epoch
};

/// One Adam step per item, items visited in a seeded shuffled order each
/// epoch. Starts from PredictorParams::init(config.seed) unless `start` is given.
TrainResult train(const std::vector<TrainItem>& items, const TrainConfig& config,
                  const PredictorParams* start = nullptr);

/// epoch,align,normal,smooth,stroke,reg,total
std::string curve_csv(const std::vector<EnergyBreakdown>& curve);

Json params_to_json(const PredictorParams& params);
PredictorParams params_from_json(const Json& j);
void save_params(const PredictorParams& params, const std::filesystem::path& path);
PredictorParams load_params(const std::filesystem::path& path);

}  // namespace cdf
