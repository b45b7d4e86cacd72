#pragma once

#include <ostream>

namespace cbo {

/// Entry point of the `cbo` tool. Returns 0 on success, 1 on a usage error and
/// 2 on a runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbo
