#ifndef SELGEN_CLI_HPP
#define SELGEN_CLI_HPP

#include <string>
#include <vector>

namespace selgen {

/// Runs one CLI invocation. Exit codes: 0 success, 1 usage error (synopsis
/// printed to stderr), 2 data/runtime error. Every successful run writes a
/// manifest.json (resolved config, seeds, input checksums) next to its
/// primary output.
int dispatch(int argc, char** argv);

/// Same, for in-process callers and tests; args excludes the program name.
int dispatch(const std::vector<std::string>& args);

}  // namespace selgen

#endif
