#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chanfee {

/// Entry point of the `chanfee` tool. `args` excludes the program name.
/// Returns 0 on success, 2 on configuration errors, 1 on runtime failures.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace chanfee
