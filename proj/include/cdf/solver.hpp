#pragma once

#include "cdf/energy.hpp"
#include "cdf/rng.hpp"

#include <span>
#include <vector>

namespace cdf {

/// Hard constraint: a face whose (u, v) pair is fixed to a conjugate pair.
struct Anchor {
    int face = -1;
    Vec3 u = Vec3::UnitX();
    Vec3 v = Vec3::UnitY();
};

struct SolverConfig {
    EnergyWeights weights;
    int max_iters = 2000;
    double step_size = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // Conjugacy weight ramps linearly from initial to final over the first
    // ramp_fraction of max_iters, then stays at final.
    double conj_initial = 1.0;
    double conj_final = 100.0;
    double ramp_fraction = 0.6;
    int renormalize_every = 50;
    // Stop when the relative total-energy decrease over `window` iterations
    // drops below `tolerance`; only checked once the ramp has finished.
    int window = 50;
    double tolerance = 1e-8;
    std::uint64_t seed = 0;
    bool allow_unconstrained = false;
    // Finish with project_conjugate() on all non-anchor faces.
    bool project_conjugate = true;
    Backend backend = Backend::Parallel;

    void validate() const;
};

struct SolveResult {
    DirectionField field;
    std::vector<EnergyBreakdown> trace;  // one entry per iteration
    int iterations = 0;
    bool converged = false;
};

/// `count` anchors on distinct faces drawn uniformly, skipping faces where
/// the random direction's conjugate is degenerate.
std::vector<Anchor> sample_anchors(const SurfaceGeometry& geom, const CurvatureFrame& frame, int count, Rng& rng);

/// Breadth-first propagation of the nearest anchor by parallel transport,
/// followed by tangent projection and conjugate correction of v. Faces
/// crossed by strokes act as extra sources with u along the segment.
DirectionField init_field(const SurfaceGeometry& geom, const CurvatureFrame& frame, std::span<const Anchor> anchors,
                          Rng& rng, const StrokeAssignment* strokes = nullptr);

/// Makes every face exactly conjugate by replacing u or v with the conjugate
/// of the other, whichever moves less. Faces with fixed[f] are skipped.
void project_conjugate(DirectionField& field, const CurvatureFrame& frame, const std::vector<bool>& fixed = {});

/// Adam minimization of the total energy plus the ramped conjugacy penalty.
SolveResult solve_cdf(const SurfaceGeometry& geom, const CurvatureFrame& frame, std::span<const Anchor> anchors,
                      const StrokeAssignment* strokes, const SolverConfig& config);

}  // namespace cdf
