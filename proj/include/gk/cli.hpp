#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gk {

/// Exit codes: 0 success, 1 unexpected failure, 2 malformed input or
/// configuration, 3 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a digest of a string, as 16 hex digits.
std::string digest_hex(const std::string& text);

} // namespace gk
