#pragma once

#include <iosfwd>

namespace jointgt::cli {

// Exit codes: 0 success, 1 user or configuration error, 2 internal error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jointgt::cli
