#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace querc::cli {

// Exit codes: 0 success, 1 usage error, 2 data or model error.
int run(int argc, const char* const* argv);
// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace querc::cli
