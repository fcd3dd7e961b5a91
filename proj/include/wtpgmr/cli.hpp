#pragma once

namespace wtpgmr::cli {

/// Entry point of the `wtpgmr` tool. Returns 0 on success, 1 on invalid
/// input, 2 on numerical failure.
int run(int argc, const char* const* argv);

}  // namespace wtpgmr::cli
