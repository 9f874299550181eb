#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cgrp {

/// argv-style entry point (without the program name). Returns the process
/// exit code: 0 on success, nonzero on any error. All failures print a
/// message to `err`; no partially written artifacts are left behind.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cgrp
