#pragma once

#include <string>
#include <vector>

namespace gradalign {

// Full command-line entry point (everything but argv[0]); returns the
// process exit code and prints a one-line diagnostic to stderr on failure.
// Kept in the library so tests can drive the tool in-process.
int cli_main(const std::vector<std::string>& args);

}  // namespace gradalign
