#ifndef CTXGATE_TOOLS_CLI_HPP_
#define CTXGATE_TOOLS_CLI_HPP_

#include <iosfwd>

namespace ctxgate::cli {

// Entry point of the ctxgate command line; returns the process exit code.
// Summaries go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctxgate::cli

#endif  // CTXGATE_TOOLS_CLI_HPP_
