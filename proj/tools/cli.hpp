#pragma once

#include <iosfwd>

namespace xbcf::cli {

// Exit codes: 0 success, 1 usage or validation error, 2 I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xbcf::cli
