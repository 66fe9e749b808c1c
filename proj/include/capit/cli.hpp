#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "capit/errors.hpp"

namespace capit::cli {

/// 0 success, 1 usage or configuration error, 2 data error, 3 numerical failure.
int exit_code_for(ErrorKind kind);

/// Commands: fit, simulate, precision, benchmark, rate-study. `args` excludes
/// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace capit::cli
