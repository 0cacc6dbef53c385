#pragma once

#include <iosfwd>

namespace gevsel::cli {

/// Exit codes: 0 success, 1 error or usage error, 2 selection not found.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gevsel::cli
