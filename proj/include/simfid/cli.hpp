#pragma once

#include <string>
#include <vector>

namespace simfid {

// Subcommand router. Exit codes: 0 success, 1 domain error, 2 usage error.
// Diagnostics go to stderr; machine output to files or stdout.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

} // namespace simfid
