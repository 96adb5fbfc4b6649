#pragma once

#include "cdf/field.hpp"
#include "cdf/parallel.hpp"
#include "cdf/stroke_types.hpp"

#include <cstdint>
#include <vector>

namespace cdf {

/// Loss weights. `conj` weights the conjugacy penalty, which is not part of
/// the learned objective and defaults to off.
struct EnergyWeights {
    double normal = 1.0;  // lambda_1
    double smooth = 1.0;  // lambda_2
    double stroke = 1.0;  // lambda_3
    double reg = 1.0;     // lambda_4
    double conj = 0.0;    // lambda_c
};

struct EnergyBreakdown {
    double align = 0.0;
    double normal = 0.0;
    double smooth = 0.0;
    double stroke = 0.0;
    double reg = 0.0;
    double conj = 0.0;
    double total = 0.0;

    // Terms whose inputs were missing contribute 0 and are flagged inactive.
    bool align_active = false;
    bool smooth_active = false;
    bool stroke_active = false;
    bool conj_active = false;
};

/// Which correspondence won a min(E, E') comparison.
enum class Branch : std::uint8_t { Direct = 0, Swapped = 1 };

/// |E - E'| at or below this selects the direct branch.
inline constexpr double kBranchTieTolerance = 1e-12;

struct FieldGradient {
    std::vector<Vec3> du;
    std::vector<Vec3> dv;

    explicit FieldGradient(int faces = 0)
        : du(static_cast<std::size_t>(faces), Vec3::Zero()),
          dv(static_cast<std::size_t>(faces), Vec3::Zero()) {}
};

/// Everything the total energy may depend on; optional pieces are null.
struct EnergyInputs {
    const SurfaceGeometry* geom = nullptr;
    const CurvatureFrame* frame = nullptr;
    const DirectionField* gt = nullptr;
    const StrokeAssignment* strokes = nullptr;
};

struct AlignmentResult {
    double value = 0.0;
    std::vector<Branch> branches;  // per face
};

struct SmoothnessResult {
    double value = 0.0;
    std::vector<Branch> branches;  // per adjacency pair
};

AlignmentResult alignment_energy(const DirectionField& field, const DirectionField& gt,
                                 const SurfaceGeometry& geom);
double normal_consistency(const DirectionField& field, const SurfaceGeometry& geom);
SmoothnessResult smoothness_energy(const DirectionField& field, const SurfaceGeometry& geom);
double stroke_consistency(const DirectionField& field, const SurfaceGeometry& geom,
                          const StrokeAssignment& assignment);
double regularization(const DirectionField& field);
double conjugacy_energy(const DirectionField& field, const CurvatureFrame& frame);

/// L_d + l1 L_dn + l2 L_ds + l3 L_dc + l4 L_fr + lc L_conj.
EnergyBreakdown total_energy(const DirectionField& field, const EnergyInputs& in,
                             const EnergyWeights& w, Backend backend = Backend::Parallel);

/// Analytic gradient of total_energy; min() terms differentiate the branch
/// selected in the same pass. `grad` is overwritten.
EnergyBreakdown total_gradient(const DirectionField& field, const EnergyInputs& in,
                               const EnergyWeights& w, FieldGradient& grad,
                               Backend backend = Backend::Parallel);

}  // namespace cdf
