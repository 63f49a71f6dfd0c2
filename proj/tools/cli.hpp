#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lexquad::cli {

/// One invocation of the `lexquad` binary. `args` excludes the program
/// name. Returns the process exit code: 0 ok, 1 usage, 2 data, 3 external.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lexquad::cli
