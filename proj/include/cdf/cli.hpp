#pragma once

namespace cdf {

/// Entry point of the `cdf` tool. Returns 0 on success, 1 on usage errors
/// and 2 on runtime errors.
int run_cli(int argc, const char* const* argv);

}  // namespace cdf
