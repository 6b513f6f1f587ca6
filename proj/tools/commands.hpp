#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nlab::cli {

enum ExitCode : int { ok = 0, numerical_failure = 1, usage_error = 2 };

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "0.02pi" -> 0.02 * pi, "pi" -> pi, "0.3" -> 0.3. Throws std::invalid_argument.
double parse_angle(const std::string& text);

}  // namespace nlab::cli
