#pragma once

#include <string>
#include <vector>

namespace fairimb::cli {

/// Runs one CLI invocation. Returns 0 on success, 1 on runtime errors
/// (with a machine-parsable `error: ...` line on stderr), 2 on usage errors.
int run(int argc, const char* const* argv);

/// Same, for callers holding the arguments without the program name.
int run(const std::vector<std::string>& args);

}  // namespace fairimb::cli
