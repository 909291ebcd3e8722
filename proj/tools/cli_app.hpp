#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gallager::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitPartial = 2;

/// Run the command line `args` (without the program name). Tables go to `out` unless
/// --output / --out-dir redirect them; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Default worker count: GALLAGER_THREADS if set to a positive integer, else 1.
int default_threads();

/// "min:max:count" -> count evenly spaced values (count == 1 gives {min}).
std::vector<double> parse_grid(const std::string& text);

/// "v1,v2,..." -> values.
std::vector<double> parse_list(const std::string& text);

}  // namespace gallager::cli
