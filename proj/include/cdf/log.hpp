#pragma once

#include <spdlog/spdlog.h>

namespace cdf {

/// Library logger. Level comes from the CDF_LOG environment variable
/// (trace, debug, info, warn, error, off); default is warn.
spdlog::logger& log();

}  // namespace cdf
