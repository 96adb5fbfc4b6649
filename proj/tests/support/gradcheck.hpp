#pragma once

#include "cdf/energy.hpp"

#include <vector>

namespace fixtures {

struct GradCheckResult {
    double max_rel_error = 0.0;
    int compared = 0;
    int excluded = 0;  // components next to a min-branch tie
};

/// Central differences of total_energy (serial backend) against
/// total_gradient on every field component. Components of faces whose
/// alignment, smoothness or stroke min() is within `tie` of switching
/// branch are excluded. Relative error is |a - n| / max(|a|, |n|, floor)
/// with floor = floor_rel * max |a|: with step 1e-6 the difference quotient
/// carries ~eps |E| / step of rounding noise, so components far below the
/// gradient scale cannot be resolved to relative precision.
GradCheckResult check_field_gradient(const cdf::DirectionField& field, const cdf::EnergyInputs& in,
                                     const cdf::EnergyWeights& w, double step = 1e-6, double tie = 1e-7,
                                     double floor_rel = 1e-3);

}  // namespace fixtures
