#ifndef MACKNET_COMMANDS_HPP
#define MACKNET_COMMANDS_HPP

#include <ostream>
#include <string>
#include <vector>

namespace macknet::cli {

/// Parses and runs one CLI invocation (args exclude the program name).
/// Exit codes: 0 success, 2 data error, 3 missing artifact, 4 numerical
/// failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace macknet::cli

#endif
