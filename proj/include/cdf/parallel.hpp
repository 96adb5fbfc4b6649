#pragma once

#include <numeric>
#include <span>

namespace cdf {

/// Selects the kernel implementation. Both produce bit-identical results;
/// Serial is the reference the parallel kernels are tested against.
enum class Backend { Serial, Parallel };

int thread_count();

/// Ordered left-to-right sum. Parallel kernels write per-element
/// contributions and reduce with this so results do not depend on the
/// number of threads.
inline double ordered_sum(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

}  // namespace cdf
